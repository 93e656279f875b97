"""Default English stopword list.

A compact list of function words, pronouns, auxiliaries and the contracted
forms that survive apostrophe removal (``dont``, ``im`` ...). Callers with a
domain list should pass their own set to :func:`interestnet.corpus.tokenize`.
"""

DEFAULT_STOPWORDS = frozenset("""
a about above after again against all am an and any are arent as at
be because been before being below between both but by
can cant cannot could couldnt
did didnt do does doesnt doing dont down during
each few for from further
had hadnt has hasnt have havent having he hed hell hes her here heres hers
herself him himself his how hows
i id ill im ive if in into is isnt it its itself
just lets me more most mustnt my myself
no nor not now of off on once only or other ought our ours ourselves out
over own
same shant she shed shell shes should shouldnt so some such
than that thats the their theirs them themselves then there theres these
they theyd theyll theyre theyve this those through to too
under until up us very
was wasnt we wed well were weve werent what whats when whens where wheres
which while who whos whom why whys will with wont would wouldnt
you youd youll youre youve your yours yourself yourselves
amp via
""".split())

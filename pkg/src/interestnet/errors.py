class EmptyInputError(ValueError):
    """No usable records were found in the input."""


class EmptyCorpusError(ValueError):
    """Every document was dropped during corpus construction."""


class InternalConsistencyError(RuntimeError):
    """A count matrix disagrees with the latent assignments.

    Always indicates a bug in the sampler, never bad input.
    """

from .runner import AREAS, ReproductionRunner

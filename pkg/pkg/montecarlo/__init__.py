from .information import binary_entropy, contingency, entropy, mutual_information, mutual_information_stderr
from .rng import RngStream, bernoulli, categorical, poisson_array, poisson_sample
from .tally import Tally, merge_all

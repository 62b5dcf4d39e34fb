from .casado import casado_rate_bound, exclusion_verdict, solve_T

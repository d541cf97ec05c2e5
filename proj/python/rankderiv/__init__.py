"""Exact matrices over Q, F_p and rational function fields, and maps obeying
the product rule on rank-s matrices."""

from ._rankderiv import *  # noqa: F401,F403

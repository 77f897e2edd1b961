"""Heisenberg-invariant Lorentz metrics on R x_Phi H_n and their compact quotients."""

__version__ = "0.1.0"
CONVENTION = "right-invariant: e^u e^v = e^(u+v-[u,v]/2); C_s has derivative Ad(e^{sW})"

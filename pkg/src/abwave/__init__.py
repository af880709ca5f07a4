"""
Heat and wave kernels of the two-dimensional Aharonov-Bohm operator.

The operator is L = -(nabla - i A(x_hat)/|x|)^2 + a(x_hat)/|x|^2. The
package provides closed-form kernels checked against partial-wave sums,
the Bessel, Hankel and Littlewood-Paley machinery behind them, and
numerical checks of dispersive, local smoothing and Strichartz estimates.
"""

from .angular import AngularField, ModeData, angular_eigs, exact_modes, hardy_constant
from .heatkernel import heat_kernel, heat_mode_sum
from .wavekernel import wave_kernel, wave_mode_sum
from .estimates import admissible, propagate, dispersive_check, strichartz_quotients

__all__ = ["AngularField", "ModeData", "angular_eigs", "exact_modes", "hardy_constant",
           "heat_kernel", "heat_mode_sum", "wave_kernel", "wave_mode_sum",
           "admissible", "propagate", "dispersive_check", "strichartz_quotients"]
__version__ = "0.1.0"

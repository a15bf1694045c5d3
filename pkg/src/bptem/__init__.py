"""Time-encoding sampling of bandpass signals.

An integrate-and-fire encoder turns a bounded bandpass waveform into a
firing-time sequence; the decoders recover the waveform and its
in-phase/quadrature components from those times alone, by alternating
projections or by a closed-form pseudoinverse over the same kernel
family.
"""

from .encoder import (FiringSequence, MeasurementSequence, ParamCheck,
                      TemParams, encode, firing_rate_bounds, integrator_trace,
                      measurements, quantization_step, quantize_times,
                      read_firing_file, validate_params, write_firing_file)
from .errors import (AmplitudeBoundError, BptemError, ConfigError,
                     DegenerateQuantizationError, DivergenceError,
                     EncodingError, GridMismatchError,
                     InsufficientFiringsError, MetricError, ParameterError,
                     RankCollapseError, SystemSizeError, TrialError)
from .metrics import MonteCarloResult, SndrReport, monte_carlo, sndr_db
from .quadrature import IntervalQuadrature
from .reconstruction import (ClosedFormSystem, DecodeDiagnostics, IterConfig,
                             PiecewiseConstant, VectorState, apocs,
                             build_closed_form, evaluate_coefficients,
                             neumann_coefficients, neumann_solution,
                             operator_probe, pcw_approx, pocs_bandlimited,
                             project_data_bl, residual_iq,
                             select_gain_convention, solve_closed_form)
from .signals import (BandSpec, IQPair, Signal, TimeGrid, add_noise,
                      bandpass_filter, gen_test_signal, lowpass_filter,
                      modulate, read_iq_csv, read_signal_csv, write_iq_csv,
                      write_signal_csv)

__version__ = "0.1.0"

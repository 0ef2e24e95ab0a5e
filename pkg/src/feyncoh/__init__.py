"""Interference and coherence of photons and matter waves by summing path amplitudes."""

from .analytic import (Normalization, PatternSamples, burt_ratio, hbt_second_order, hom_second_order,
                       mz_first_order, multi_beam_first_order, multi_source_second_order,
                       subwavelength_decomposition, third_order_pattern, third_order_value)
from .config import ExperimentConfig, parse_config
from .core import (DetectorSpec, DomainError, Geometry, PhaseModel, SourceKind, SourceSpec, Spectrum,
                   SpectrumKind, Statistics, UsageError, degeneracy_factor_blackbody,
                   degeneracy_factor_laser, sinc)
from .montecarlo import (CorrelationResult, EventConfig, FirstOrderConfig, SimulationConfig, correlate,
                         fit_visibility, generate_events, intensity_correlation, simulate_first_order)
from .paths import (DetectionPoint, Experiment, classify, enumerate_ways, ensemble_probability,
                    matrix_path_sum, way_amplitude)
from .propagators import (SpacetimePoint, extended_source_propagator, free_particle_propagator,
                          point_propagator)

__all__ = [name for name in dir() if not name.startswith("_")]

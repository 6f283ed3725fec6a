"""Continuous-time long-term memory for streamed embedding sequences."""

from .attention import (DensityProfile, ProjectionSet, continuous_scores, gibbs_density,
                        ltm_attention, project, stm_attention)
from .basis import BasisFamily, design_matrix, eval_psi
from .config import PipelineConfig
from .errors import (ConfigError, DegenerateDensityError, EmptyMemoryError, InvalidArgumentError,
                     OutOfDomainError, SingularMatrixError)
from .memory import (MemoryState, consolidate, init_memory, record_density, sample_past,
                     top_density_intervals)
from .numerics import (QuadratureGrid, integrate, inverse_cdf_sample, normalized_exp,
                       uniform_grid)
from .pipeline import StreamResult, process_chunk, run_stream
from .signal import (ContinuousSignal, FrameChunk, evaluate, evaluate_many, fit, frame_times,
                     pool_patches)

__version__ = "0.1.0"

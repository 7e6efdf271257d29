"""Whole-body control of a velocity-controlled mobile manipulator.

A 3-DoF omnidirectional base and a 6-DoF arm share one end-effector task
through a weighted least-norm resolution.  Coupled dynamic movement
primitives add obstacle avoidance, hybrid stiffness/force control and
physical interaction on top, and a deterministic simulator replays the
bundled scenarios.
"""
from ._backend import BACKEND
from .controller import (ControlOutputs, ControllerConfig, LocalWorkspaceParams,
                         LoopContext, Reference, Sensors, control_step,
                         deactivation_sigma, workspace_factors)
from .coordination import (CompensationResult, FilterParams, FilterState,
                           accumulate_deviation, compensate, lowpass_step,
                           transition_alpha)
from .dmp import (CdmpParams, CdmpState, CouplingInputs, ForcingTerm,
                  RepulsiveFieldParams, admittance_coupled_step, arm_cdmp_step,
                  base_cdmp_step, canonical_step, dmp_step, learn_forcing_term,
                  obstacle_coupled_step, repulsive_force, stiffness_coupled_step,
                  wholebody_cdmp_step)
from .errors import (DegenerateGradient, InsufficientData, ParseError, ScenarioError,
                     SingularTask, ValidationError, WbcError)
from .kinematics import (RobotModel, WholeBodyState, arm_jacobian, base_jacobian,
                         forward_kinematics, whole_body_jacobian,
                         world_to_base_rotation)
from .redundancy import (CapabilityMetrics, CmOptimizationParams, WeightingFactors,
                         cm_gradient, movement_capability, resolve_wln,
                         weighting_matrix)
from .sim import (BasePlantParams, ContactSurface, Obstacle, Scenario, ScenarioLog,
                  World, arm_plant_step, base_plant_step, contact_force,
                  measure_obstacle_distance, run_scenario, world_step)

__version__ = "0.1.0"

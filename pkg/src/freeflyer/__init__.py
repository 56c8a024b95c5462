"""Free-floating spacecraft manipulator kinematics, dynamics, control and simulation."""
from .model import (BaseBody, DHParams, InertiaTensor, LinkParams, Payload, SystemModel, SystemState, Wrench,
                    validate_model)
from .kinematics import (ee_position_barycentric, ee_position_explicit, fixed_base_jacobian, generalized_jacobian,
                         system_com)
from .dynamics import (DynamicsError, IntegrationError, forward_dynamics_free, momentum, newton_euler,
                       reaction_wrench, step)
from .sim import ScenarioConfig, ScenarioError, load_scenario, run

__version__ = "0.1.0"

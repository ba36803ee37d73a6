from .base import AlgebraVector, ControlPath, GroupModel, GroupPoint, bracket, inverse, multiply
from .diffeo import FourierDiffeo
from .extension import (ExtensionDatum, ExtensionGroup, ValidationReport, VectorGroup,
                        heisenberg, heisenberg_datum, split_datum, validate_extension_datum)
from .flows import bracket_via_flows, evolve, flow_difference, regularity_decay
from .matrix import SO2, SO3, MatrixGroup, hat3, rotation2, vee3
from .records import control_from_record, control_to_record, point_from_record, point_to_record
from .semidirect import SemidirectProduct

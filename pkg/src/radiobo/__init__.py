"""GP radio mapping and UCB-guided flight simulation for transmitter localization."""

from .acquisition import UcbSchedule, beta, next_waypoint, ucb_field
from .channel import ChannelModel
from .geo import GeoGrid, GeoPoint, LocalFrame, make_grid
from .gp import FittedGP, PosteriorField, TrainingSet, argmax_mean, fit, posterior
from .kernels import HyperBounds, HyperParams
from .mission import MissionConfig, MissionReport, run_mission

__version__ = "0.1.0"

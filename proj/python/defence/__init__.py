"""Image de-fencing toolkit: fence synthesis, GAN training, inference, evaluation."""

import torch as _torch  # noqa: F401  loads the shared libtorch runtime _core links against

from ._core import *  # noqa: F401,F403

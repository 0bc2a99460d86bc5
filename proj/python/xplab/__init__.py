# Copyright 2026 The xplab Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Symmetry breaking and cross-play experiments on small Dec-POMDPs.

The heavy lifting lives in the compiled ``_core`` extension; this module adds
dict-based wrappers for the functions that take JSON configuration.
"""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import (
    __version__,
    _make_env,
    _sweep_alpha,
    _train,
)


def make_env(config):
    """Builds an environment from a dict such as {"kind": "cat_dog"}."""
    return _make_env(_json.dumps(config))


def train(env, config=None):
    """Trains one joint policy; returns (policy, log rows).

    ``config`` uses the same keys as the "train" section of an experiment
    file, e.g. {"entropy_coefficient": 1.2, "iterations": 500, "seed": 3}.
    """
    return _train(env, _json.dumps(config or {}))


def sweep_alpha(env, alphas, seeds_per_alpha, config=None, threads=1):
    """Trains seeds_per_alpha policies per entropy coefficient."""
    return _sweep_alpha(env, list(alphas), seeds_per_alpha,
                        _json.dumps(config or {}), threads)

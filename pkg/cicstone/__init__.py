# -*- coding: utf-8 -*-
""" cicstone

Contrastive Intrinsic Control at desk scale: reward-free skill pretraining on toy
worlds, skill adaptation by grid sweep, extrinsic finetuning and the evaluation
statistics to compare agents.
"""

__version__ = "0.1.0"

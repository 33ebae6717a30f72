# -*- coding: utf-8 -*-
""" Cicstone Core Subpackage.

This subpackage holds what every other part of the library depends on: the dense
network substrate, random streams, configuration, checkpoint persistence, errors
and console output.
"""

# -*- coding: utf-8 -*-
""" Statistics Subpackage.

"""

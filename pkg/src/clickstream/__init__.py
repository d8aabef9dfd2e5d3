"""Identify user-actions in HTTP logs and analyze the resulting clickstreams."""

from .features import AUTOMATIC, FEATURE_NAMES, USER_ACTION, FeatureVector, features_for_records
from .graph import ClickstreamGraph, build_graph, build_graphs
from .trace import BrowserId, DeviceClass, HttpRecord, read_log, write_log

__version__ = "0.1.0"

__all__ = [
    "AUTOMATIC",
    "FEATURE_NAMES",
    "USER_ACTION",
    "BrowserId",
    "ClickstreamGraph",
    "DeviceClass",
    "FeatureVector",
    "HttpRecord",
    "build_graph",
    "build_graphs",
    "features_for_records",
    "read_log",
    "write_log",
]

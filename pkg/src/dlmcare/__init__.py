"""Decentralized-label data store for IoT healthcare monitoring.

A cloud database and a set of hospital nodes share one security perimeter.
Every stored datum carries an owner/reader label plus retention metadata;
phones and home hubs only upload and control, they never hold data.
"""

from dlmcare.errors import DlmError
from dlmcare.labels import DlmLabel, LabelledItem, Meta, flow_permitted, item_identity, may_read
from dlmcare.state import SystemState

__all__ = [
    "DlmError",
    "DlmLabel",
    "LabelledItem",
    "Meta",
    "SystemState",
    "flow_permitted",
    "item_identity",
    "may_read",
]

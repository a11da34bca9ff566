"""End-to-end semantic transceivers for retrieval, translation and VQA."""
from .ir import IRConfig, IRTransceiver, ir_retrieve
from .jsc import JSCDecoder, JSCEncoder
from .link import LinkConfig, mimo_link, stack_users, through_link, unstack_users
from .mt import BOS, EOS, PAD, MTConfig, MTTransceiver
from .system import UserLink, end_to_end
from .vqa import FusionTrace, InformationFusion, LayerwiseTransformer, VQAConfig, VQATransceiver

__all__ = [
    "IRConfig", "IRTransceiver", "ir_retrieve", "JSCEncoder", "JSCDecoder", "LinkConfig", "mimo_link",
    "stack_users", "unstack_users", "through_link", "MTConfig", "MTTransceiver", "PAD", "BOS", "EOS",
    "UserLink", "end_to_end", "VQAConfig", "VQATransceiver", "LayerwiseTransformer", "InformationFusion",
    "FusionTrace",
]

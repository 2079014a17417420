"""UAV image prompt enhancement: geometry, prompt fusion, MCP tools and benchmarks."""

import json as _json

from ._aerialvp import (
    AerialvpError,
    BoundingBox,
    InputError,
    McpClient,
    StubServer,
    ToolRegistry,
    clamp_to_image,
    default_plan,
    grounding_metrics,
    grounding_metrics_from_ious,
    iou,
    load_dataset,
    parse_task_type,
    parse_vg_answer,
    parse_vqa_answer,
    parse_vr_answer,
)
from ._aerialvp import Session as _Session
from ._aerialvp import fuse_prompt as _fuse_prompt

__all__ = [
    "AerialvpError",
    "BoundingBox",
    "InputError",
    "McpClient",
    "Session",
    "StubServer",
    "ToolRegistry",
    "call_tool",
    "clamp_to_image",
    "default_plan",
    "fuse_prompt",
    "grounding_metrics",
    "grounding_metrics_from_ious",
    "iou",
    "load_dataset",
    "parse_task_type",
    "parse_vg_answer",
    "parse_vqa_answer",
    "parse_vr_answer",
]


def fuse_prompt(task, objects, instruction, blocks=None, plan=None, block_char_cap=0):
    """Return (text, provenance dict) for the fused prompt."""
    text, provenance = _fuse_prompt(task, list(objects), instruction, dict(blocks or {}), plan, block_char_cap)
    return text, _json.loads(provenance)


def call_tool(client, address, name, arguments=None, transport="http"):
    return _json.loads(client.call_tool(address, name, _json.dumps(arguments or {}), transport))


class Session:
    """Engine session built from a registry/run config file."""

    def __init__(self, config):
        self._impl = _Session(str(config))

    def enhance(self, prompt, image, width, height):
        text, provenance = self._impl.enhance(prompt, str(image), width, height)
        return text, _json.loads(provenance)

    def tool_names(self):
        return self._impl.tool_names()

    def bench(self, dataset, out_dir, task="all", baseline=False):
        return self._impl.bench(str(dataset), str(out_dir), task, baseline)

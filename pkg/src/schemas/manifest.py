from datetime import datetime
from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class SRunManifest(BaseModel):
    command: str
    config_path: Optional[str] = None
    seed: int
    output_dir: str
    tool_version: str
    started_at: datetime = Field(default_factory=datetime.now)
    wall_clock_seconds: float = 0.0
    input_hashes: Dict[str, str] = Field(default_factory=dict, description="sha256 per input file")
    outputs: List[str] = Field(default_factory=list)

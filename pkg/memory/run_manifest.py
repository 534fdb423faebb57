"""
运行清单
Records the full config, seed, checkpoints and status of a training run as JSON
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional


class RunManifest:
    """训练运行清单 (manifest.json)"""

    FILE_NAME = "manifest.json"

    def __init__(self, run_dir: str):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.path = self.run_dir / self.FILE_NAME
        self.data: Dict[str, Any] = {}
        self.logger = logging.getLogger(__name__)
        self.load()

    def create(self, config: Dict[str, Any], seed: int) -> Dict[str, Any]:
        """
        新建清单 (覆盖同目录下已有的清单)

        Args:
            config: 完整配置字典
            seed: 随机种子

        Returns:
            清单内容
        """
        now = datetime.now().isoformat()
        self.data = {
            'run_dir': str(self.run_dir),
            'created_at': now,
            'last_updated': now,
            'seed': seed,
            'config': config,
            'checkpoints': [],
            'state': {},
            'status': 'running',
        }
        self.save()
        self.logger.info(f"Created run manifest: {self.path}")
        return self.data

    def add_checkpoint(self, path: str, step: int):
        self.data.setdefault('checkpoints', []).append({'path': str(path), 'step': int(step)})
        self._touch()

    def update_state(self, state: Dict[str, Any]):
        """更新运行状态 (环境步数、关卡等)"""
        self.data.setdefault('state', {}).update(state)
        self._touch()

    def set_status(self, status: str, error: Optional[str] = None):
        self.data['status'] = status
        if error:
            self.data['error'] = error
        self._touch()
        self.logger.info(f"Run status: {status}")

    @property
    def checkpoints(self) -> List[Dict[str, Any]]:
        return list(self.data.get('checkpoints', []))

    @property
    def status(self) -> Optional[str]:
        return self.data.get('status')

    def last_checkpoint(self) -> Optional[str]:
        checkpoints = self.checkpoints
        return checkpoints[-1]['path'] if checkpoints else None

    def _touch(self):
        self.data['last_updated'] = datetime.now().isoformat()
        self.save()

    def save(self):
        """保存清单到文件"""
        try:
            with open(self.path, 'w', encoding='utf-8') as f:
                json.dump(self.data, f, indent=2, ensure_ascii=False)
        except OSError as e:
            self.logger.error(f"Failed to save manifest: {str(e)}")

    def load(self):
        """从文件加载清单"""
        try:
            if self.path.exists():
                with open(self.path, 'r', encoding='utf-8') as f:
                    self.data = json.load(f)
                self.logger.info(f"Loaded run manifest: {self.path}")
        except (OSError, json.JSONDecodeError) as e:
            self.logger.error(f"Failed to load manifest: {str(e)}")
            self.data = {}

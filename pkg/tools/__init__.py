"""
自定义工具模块
提供仿真、代价地图、场景文件和评估指标功能
"""

from .simulator import LaserScan, Pose, Twist, World, raycast, step_kinematics
from .costmap_generator import Costmap, MapStack, scan_to_costmap
from .metric_calculator import Metrics, compute_metrics

__all__ = [
    'LaserScan', 'Pose', 'Twist', 'World', 'raycast', 'step_kinematics',
    'Costmap', 'MapStack', 'scan_to_costmap',
    'Metrics', 'compute_metrics',
]

# -*- coding: utf-8 -*-

"""
逐维可逆变换的常量
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""


MIN_BIN_WIDTH = 1e-3
"""样条最小分箱宽度（归一化前的比例）"""

MIN_BIN_HEIGHT = 1e-3
"""样条最小分箱高度（归一化前的比例）"""

MIN_DERIVATIVE = 1e-3
"""样条内部节点导数下限"""

BOUNDARY_DERIVATIVE = 1.0
"""样条两端节点的导数，与恒等尾部衔接"""

BRACKET_START = 1.0
"""二分法初始区间 [-1, 1]"""

BRACKET_MAX_DOUBLINGS = 64
"""二分法向外扩张区间的最大次数"""

XI_TOLERANCE = 1e-9
"""样条求逆时允许 ξ 略超出 [0, 1] 的舍入误差"""

# -*- coding: utf-8 -*-

"""
自动微分核心的常量
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""


MASK_SURROGATE = -1e30
"""注意力掩码中代替 -∞ 的大负数"""

MASKED_THRESHOLD = MASK_SURROGATE / 2
"""掩码值不大于此数的位置视为被遮蔽"""

FD_STEP = 1e-5
"""中心差分默认步长"""

ELEMENTWISE_OPS = ("add", "mul", "tanh", "sigmoid", "exp", "log", "softplus", "neg")
"""elementwise 接受的运算名"""

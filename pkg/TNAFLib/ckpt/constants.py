# -*- coding: utf-8 -*-

"""
检查点文件格式的常量
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import struct

import numpy as np

CKPT_MAGIC = b"TNAFCKPT"
"""文件开头的 8 字节魔数"""

CKPT_FORMAT_VERSION = 1
"""文件头中记录的格式版本"""

CKPT_HEADER_LENGTH = struct.Struct("<I")
"""JSON 文件头长度，小端无符号 32 位整数"""

CKPT_BLOB_DTYPE = np.dtype("<f4")
"""参数数据块的存储类型"""

CKPT_HEADER_KEYS = ("format_version", "D", "config", "stats", "manifest", "blob_sha256")
"""文件头必须包含的键"""

# -*- coding: utf-8 -*-

"""
常量与数值性内容
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""


# 头部类型

HEAD_AFFINE = "affine"
"""仿射变换头"""

HEAD_CDF = "cdf"
"""神经累积分布函数头"""

HEAD_SHARED_CDF = "shared_cdf"
"""共享参数的条件累积分布函数头"""

HEAD_SPLINE = "spline"
"""有理二次样条头"""

HEAD_TYPES = (HEAD_AFFINE, HEAD_CDF, HEAD_SHARED_CDF, HEAD_SPLINE)
"""全部头部类型"""


# 基分布

BASE_STANDARD_NORMAL = "standard_normal"
"""标准正态分布"""

BASE_UNIT_UNIFORM = "unit_uniform"
"""单位超立方体上的均匀分布"""


# 条件网络（变换器）默认值

DEFAULT_EMBEDDING = 32
"""嵌入宽度 E"""

DEFAULT_HEADS = 8
"""注意力头数"""

DEFAULT_LAYERS = 3
"""编码器层数 L"""

DEFAULT_MLP_HIDDEN = 64
"""编码器内 MLP 的隐藏宽度"""

LAYER_NORM_EPS = 1e-5
"""层归一化中加在方差上的常数"""

INIT_EMBEDDING_STD = 0.02
"""位置嵌入与起始嵌入的初始化标准差"""


# 变换头默认值

DEFAULT_CDF_HIDDEN = 128
"""CDF 网络隐藏宽度 H"""

DEFAULT_SPLINE_BINS = 8
"""样条分箱数 K"""

DEFAULT_SPLINE_BOUND = 3.0
"""样条区间半宽 B"""

DEFAULT_SPLINE_BLOCKS = 2
"""样条块数 J"""

DEFAULT_AFFINE_BLOCKS = 1
"""仿射块数"""

POSITIVITY_EXP = "exp"
"""以指数函数保证权重为正"""

POSITIVITY_SOFTPLUS = "softplus"
"""以 softplus 保证权重为正"""

DEFAULT_BISECTION_TOL = 1e-6
"""二分法求逆的区间宽度容差"""


# 训练默认值

DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_BATCH_SIZE = 256
DEFAULT_MAX_STEPS = 50_000
DEFAULT_CLIP_NORM = 5.0
DEFAULT_PATIENCE = 20
DEFAULT_EVAL_EVERY = 500
DEFAULT_SEED = 0

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

EVAL_CHUNK_ROWS = 4096
"""无梯度评估时每块的行数"""


# 数据默认值

DATA_FORMAT_CSV = "csv"
DATA_FORMAT_RAW_F32 = "raw_f32"
DATA_FORMATS = (DATA_FORMAT_CSV, DATA_FORMAT_RAW_F32)

DEFAULT_SPLIT_FRACTIONS = (0.8, 0.1, 0.1)
"""训练、验证、测试集比例"""

TOY_GAUSS_MIXTURE_8 = "gauss_mixture_8"
TOY_TWO_MOONS = "two_moons"
TOY_RING = "ring"
TOY_NAMES = (TOY_GAUSS_MIXTURE_8, TOY_TWO_MOONS, TOY_RING)

DEFAULT_TOY_ROWS = 25_000


# 命令行与日志

METRICS_LOGGER_NAME = "TNAFLib.metrics"
"""训练指标专用日志记录器"""

CLI_HANDLER_NAME = "TNAFLib.cli"
"""命令行装到日志记录器上的处理器名称"""

METRIC_LINE_FORMAT = "step={step:d} train_nll={train_nll:.6f} val_nll={val_nll:.6f}"
"""训练指标行格式"""

RESULT_LINE_FORMAT = "test_ll={mean:.6f} ± {std_err:.6f}"
"""评估结果行格式"""

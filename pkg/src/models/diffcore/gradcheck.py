# 梯度校验模块

from typing import Callable, List

import numpy as np

from .tensor import Tensor, backward


def numerical_gradient(fn: Callable[[], Tensor], param: Tensor, h: float = 1e-5) -> np.ndarray:
    """
    中心差分数值梯度

    参数:
        fn: 无参函数，每次调用重新构建计算图并返回标量损失
        param: 需要求梯度的参数（原地扰动后恢复）
        h: 差分步长
    """
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = fn().item()
        flat[i] = original - h
        minus = fn().item()
        flat[i] = original
        grad_flat[i] = (plus - minus) / (2.0 * h)
    return grad


def gradient_check(fn: Callable[[], Tensor], params: List[Tensor], h: float = 1e-5) -> float:
    """
    比较解析梯度与中心差分梯度

    相对误差按参数张量计算: ‖解析 − 数值‖ / max(‖解析‖, ‖数值‖, 1e-12)

    返回:
        所有参数中最大的相对误差
    """
    for p in params:
        p.grad = None
    backward(fn())
    worst = 0.0
    for p in params:
        analytic = p.grad.copy()
        numeric = numerical_gradient(fn, p, h)
        scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
        worst = max(worst, float(np.linalg.norm(analytic - numeric) / scale))
    for p in params:
        p.grad = None
    return worst

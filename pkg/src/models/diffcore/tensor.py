# 张量与反向传播模块

import logging
from numbers import Number
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.errors import ContractError, DimensionError, DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence, Number]
GradFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """
    稠密多维张量，带可选梯度
    所有数值以 64 位浮点、行主序存放在 numpy 数组中
    """

    __slots__ = ('data', 'requires_grad', 'grad', '_parents', '_grad_fn', '_op')

    def __init__(self, values: ArrayLike, requires_grad: bool = False,
                 _parents: Tuple['Tensor', ...] = (), _grad_fn: Optional[GradFn] = None, _op: str = '',
                 _copy: bool = True):
        """
        初始化张量

        参数:
            values: 数值，任意可转换为 numpy 数组的对象
            requires_grad: 是否需要计算梯度
        """
        if _copy:
            self.data = np.array(values, dtype=np.float64)
        else:
            self.data = np.asarray(values, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents = _parents
        self._grad_fn = _grad_fn
        self._op = _op

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def values(self) -> np.ndarray:
        """行主序展平后的数值"""
        return self.data.ravel()

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def is_leaf(self) -> bool:
        return self._grad_fn is None

    @property
    def T(self) -> 'Tensor':
        return transpose(self)

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"只有单元素张量可以转换为标量, 当前形状 {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> 'Tensor':
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}, op='{self._op}')"


class ComputationRecord:
    """
    计算记录：按拓扑顺序排列的运算节点
    每个节点的输入都排在它之前
    """

    def __init__(self, operations: List[Tensor]):
        self.operations = operations

    @classmethod
    def from_output(cls, output: Tensor) -> 'ComputationRecord':
        """
        从输出张量出发，构建其计算图的拓扑序

        参数:
            output: 计算图的输出张量

        返回:
            计算记录
        """
        order = []
        visited = set()
        stack = [(output, False)]
        # 迭代式后序遍历，避免深层推演时递归过深
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return cls(order)

    def __len__(self) -> int:
        return len(self.operations)


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _make(data: np.ndarray, parents: Tuple[Tensor, ...], grad_fn: GradFn, op: str) -> Tensor:
    """根据输入是否需要梯度决定是否记录反向规则"""
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, _parents=parents, _grad_fn=grad_fn, _op=op, _copy=False)
    return Tensor(data, _op=op, _copy=False)


def backward(loss: Tensor) -> None:
    """
    从标量损失出发执行一次反向传播
    叶子张量的梯度在多次调用间累加

    参数:
        loss: 标量损失张量
    """
    if loss.data.size != 1:
        raise ContractError(f"backward 只接受标量损失, 当前形状 {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("损失不依赖任何需要梯度的张量")

    record = ComputationRecord.from_output(loss)

    # 中间节点的梯度每次重新计算
    pending: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(record.operations):
        g = pending.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        node.grad = g
        parent_grads = node._grad_fn(g)
        for parent, pg in zip(node._parents, parent_grads):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in pending:
                pending[key] = pending[key] + pg
            else:
                pending[key] = pg


def _check_same_shape(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape and a.data.size != 1 and b.data.size != 1:
        raise DimensionError(f"{op} 运算形状不一致", a.shape, b.shape)


def _reduce_to(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """将广播后的梯度归约回标量操作数的形状"""
    if g.shape == shape:
        return g
    return np.asarray(g.sum()).reshape(shape)


# ---------------------------------------------------------------------------
# 矩阵乘法
# ---------------------------------------------------------------------------

def matmul(a, b) -> Tensor:
    """
    矩阵乘法，支持 矩阵×矩阵、矩阵×向量、向量×矩阵、向量×向量

    参数:
        a: 形状 [m×k] 或 [k]
        b: 形状 [k×n] 或 [k]

    返回:
        乘积张量
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2):
        raise DimensionError("matmul 只支持一维或二维张量", a.shape, b.shape)
    if a.shape[-1] != b.shape[0]:
        raise DimensionError("matmul 内维不一致", a.shape, b.shape)

    a_data, b_data = a.data, b.data
    out = a_data @ b_data

    def grad_fn(g):
        if a.ndim == 2 and b.ndim == 2:
            return g @ b_data.T, a_data.T @ g
        if a.ndim == 2:
            return np.outer(g, b_data), a_data.T @ g
        if b.ndim == 2:
            return b_data @ g, np.outer(a_data, g)
        return g * b_data, g * a_data

    return _make(out, (a, b), grad_fn, 'matmul')


# ---------------------------------------------------------------------------
# 逐元素运算
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b, 'add')
    out = a.data + b.data
    return _make(out, (a, b), lambda g: (_reduce_to(g, a.shape), _reduce_to(g, b.shape)), 'add')


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b, 'sub')
    out = a.data - b.data
    return _make(out, (a, b), lambda g: (_reduce_to(g, a.shape), _reduce_to(-g, b.shape)), 'sub')


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b, 'mul')
    a_data, b_data = a.data, b.data
    out = a_data * b_data
    return _make(out, (a, b),
                 lambda g: (_reduce_to(g * b_data, a.shape), _reduce_to(g * a_data, b.shape)), 'mul')


def scale(x, c: float) -> Tensor:
    """乘以常数 c"""
    x = as_tensor(x)
    c = float(c)
    return _make(x.data * c, (x,), lambda g: (g * c,), 'scale')


def tanh(x) -> Tensor:
    x = as_tensor(x)
    out = np.tanh(x.data)
    return _make(out, (x,), lambda g: (g * (1.0 - out * out),), 'tanh')


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = (x.data > 0).astype(np.float64)
    return _make(x.data * mask, (x,), lambda g: (g * mask,), 'relu')


def square(x) -> Tensor:
    x = as_tensor(x)
    x_data = x.data
    return _make(x_data * x_data, (x,), lambda g: (2.0 * x_data * g,), 'square')


def cos(x) -> Tensor:
    x = as_tensor(x)
    x_data = x.data
    return _make(np.cos(x_data), (x,), lambda g: (-np.sin(x_data) * g,), 'cos')


def power(x, p: float) -> Tensor:
    """逐元素幂运算 x**p"""
    x = as_tensor(x)
    p = float(p)
    x_data = x.data
    out = np.power(x_data, p)
    return _make(out, (x,), lambda g: (g * p * np.power(x_data, p - 1.0),), 'power')


_ELEMENTWISE = {
    'add': add,
    'sub': sub,
    'mul': mul,
    'scale': scale,
    'tanh': tanh,
    'relu': relu,
    'square': square,
    'cos': cos,
    'power': power,
}


def elementwise(op: str, *args) -> Tensor:
    """
    按名称调用逐元素运算

    参数:
        op: 运算名称 (add, sub, mul, scale, tanh, relu, square, cos, power)
        *args: 运算参数
    """
    if op not in _ELEMENTWISE:
        raise DomainError(f"不支持的逐元素运算: {op}")
    return _ELEMENTWISE[op](*args)


# ---------------------------------------------------------------------------
# 归约
# ---------------------------------------------------------------------------

def _check_non_empty(x: Tensor, op: str):
    if x.data.size == 0:
        raise DomainError(f"{op} 不能作用于空张量")


def reduce_sum(x, axis: Optional[int] = None) -> Tensor:
    x = as_tensor(x)
    _check_non_empty(x, 'sum')
    shape = x.shape
    out = x.data.sum(axis=axis)

    def grad_fn(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return _make(out, (x,), grad_fn, 'sum')


def mean(x, axis: Optional[int] = None) -> Tensor:
    x = as_tensor(x)
    _check_non_empty(x, 'mean')
    count = x.data.size if axis is None else x.shape[axis]
    return scale(reduce_sum(x, axis), 1.0 / count)


def reduce_max(x, axis: Optional[int] = None) -> Tensor:
    """
    最大值归约，梯度只传给（按索引）第一个取到最大值的元素
    """
    x = as_tensor(x)
    _check_non_empty(x, 'max')
    shape = x.shape
    if axis is None:
        index = int(np.argmax(x.data))
        out = x.data.ravel()[index]

        def grad_fn(g):
            grad = np.zeros(x.data.size)
            grad[index] = g
            return (grad.reshape(shape),)

        return _make(out, (x,), grad_fn, 'max')

    indices = np.expand_dims(np.argmax(x.data, axis=axis), axis)
    out = np.take_along_axis(x.data, indices, axis=axis).squeeze(axis)

    def grad_fn(g):
        grad = np.zeros(shape)
        np.put_along_axis(grad, indices, np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return _make(out, (x,), grad_fn, 'max')


def sq_norm(x) -> Tensor:
    """平方欧氏范数 ‖x‖²"""
    return reduce_sum(square(x))


_REDUCTIONS = {
    'sum': reduce_sum,
    'mean': mean,
    'max': reduce_max,
    'sq_norm': sq_norm,
}


def reduction(op: str, x) -> Tensor:
    """
    按名称调用归约到标量的运算

    参数:
        op: sum, mean, max, sq_norm
        x: 输入张量
    """
    if op not in _REDUCTIONS:
        raise DomainError(f"不支持的归约运算: {op}")
    return _REDUCTIONS[op](x)


# ---------------------------------------------------------------------------
# 结构性运算
# ---------------------------------------------------------------------------

def transpose(x) -> Tensor:
    x = as_tensor(x)
    if x.ndim != 2:
        raise DimensionError("transpose 只支持二维张量", x.shape, (2,))
    return _make(x.data.T.copy(), (x,), lambda g: (g.T,), 'transpose')


def reshape(x, shape: Tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    original = x.shape
    try:
        out = x.data.reshape(shape)
    except ValueError as e:
        raise DimensionError("reshape 元素数不一致", original, shape) from e
    return _make(out.copy(), (x,), lambda g: (g.reshape(original),), 'reshape')


def take(x, indices, axis: int = 0) -> Tensor:
    """
    沿某一轴按下标取值，重复下标的梯度会累加

    参数:
        x: 输入张量
        indices: 整数或整数数组
        axis: 取值的轴
    """
    x = as_tensor(x)
    shape = x.shape
    idx = np.asarray(indices, dtype=np.int64)
    out = np.take(x.data, idx, axis=axis)

    def grad_fn(g):
        grad = np.zeros(shape)
        moved = np.moveaxis(grad, axis, 0)
        g_moved = np.moveaxis(g, axis, 0) if idx.ndim > 0 else g
        np.add.at(moved, idx, g_moved)
        return (grad,)

    return _make(out, (x,), grad_fn, 'take')


def scatter(x, dst_indices, shape: Tuple[int, ...], src_indices=None, signs=None) -> Tensor:
    """
    把 x 的元素放入一个全零张量的指定（展平）位置:
    out.flat[dst[k]] = signs[k] * x.flat[src[k]]
    未被指定的位置恒为 0，且不会产生梯度

    参数:
        x: 源张量
        dst_indices: 目标展平下标
        shape: 输出形状
        src_indices: 源展平下标，默认 0..len(dst)-1
        signs: 每个位置的系数，默认全为 1
    """
    x = as_tensor(x)
    dst = np.asarray(dst_indices, dtype=np.int64)
    src = np.arange(dst.size) if src_indices is None else np.asarray(src_indices, dtype=np.int64)
    coeff = np.ones(dst.size) if signs is None else np.asarray(signs, dtype=np.float64)
    if src.size != dst.size or coeff.size != dst.size:
        raise DimensionError("scatter 源下标与目标下标数量不一致", src.shape, dst.shape)
    if len(np.unique(dst)) != dst.size:
        raise ContractError("scatter 的目标下标不能重复")

    flat = x.data.ravel()
    out = np.zeros(int(np.prod(shape)))
    out[dst] = coeff * flat[src]
    x_shape = x.shape

    def grad_fn(g):
        grad = np.zeros(flat.size)
        np.add.at(grad, src, coeff * g.ravel()[dst])
        return (grad.reshape(x_shape),)

    return _make(out.reshape(shape), (x,), grad_fn, 'scatter')


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    """沿给定轴拼接张量"""
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise DomainError("concat 需要至少一个张量")
    sizes = [t.shape[axis] for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise DimensionError("concat 形状不一致", tensors[0].shape, tensors[-1].shape) from e
    splits = np.cumsum(sizes)[:-1]

    def grad_fn(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(out, tuple(tensors), grad_fn, 'concat')

from collections import deque
from dataclasses import asdict, dataclass, field

from common import RoutingError
from ba_estimators.config import DEFAULT_VARIANCE_MODE
from coat_tree.config import DEFAULT_ALPHA, DEFAULT_MINSIZE, DEFAULT_MINSPLIT


@dataclass(frozen=True)
class FitConfig:
    alpha: float = DEFAULT_ALPHA
    minsize: int = DEFAULT_MINSIZE
    minsplit: int = DEFAULT_MINSPLIT
    maxdepth: int | None = None
    design: str | None = None
    variance_mode: str = DEFAULT_VARIANCE_MODE
    outcome: str = "ba"
    include_mean_covariate: bool = False

    def to_dict(self):
        return asdict(self)


@dataclass
class CoatNode:
    id: int
    depth: int
    subject_ids: list
    estimate: object = None  # BAEstimate, None if the node sample is not estimable
    split: dict | None = None  # {"covariate": name, "cutpoint": c} or {"covariate": name, "levels": [...]}
    p_adjusted: float | None = None
    statistic: float | None = None
    df: int | None = None
    p_table: dict = field(default_factory=dict)
    children: list = field(default_factory=list)

    @property
    def kind(self):
        return "inner" if self.children else "leaf"

    @property
    def n_subjects(self):
        return len(self.subject_ids)

    def goes_left(self, value):
        if "cutpoint" in self.split:
            try:
                return float(value) <= self.split["cutpoint"]
            except (TypeError, ValueError):
                raise RoutingError(
                    f"covariate '{self.split['covariate']}' needs a numeric value at node {self.id}, got {value!r}"
                ) from None
        return value in self.split["levels"]

    def rule(self, left):
        """Human readable branch condition for the child on the given side."""
        name = self.split["covariate"]
        if "cutpoint" in self.split:
            op = "<=" if left else ">"
            return f"{name} {op} {self.split['cutpoint']:g}"
        op = "in" if left else "not in"
        return f"{name} {op} {{{', '.join(map(str, self.split['levels']))}}}"


@dataclass
class CoatTree:
    root: CoatNode
    config: FitConfig
    covariate_schema: tuple
    design: str
    diagnostics: dict = field(default_factory=dict)
    dataset: object = field(default=None, compare=False, repr=False)

    def nodes(self):
        """All nodes in breadth-first (id) order."""
        queue, out = deque([self.root]), []
        while queue:
            node = queue.popleft()
            out.append(node)
            queue.extend(node.children)
        return out

    def leaves(self):
        return [node for node in self.nodes() if node.kind == "leaf"]

    def node(self, node_id):
        for node in self.nodes():
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    @property
    def depth(self):
        """Number of split layers below the root."""
        return max(node.depth for node in self.nodes()) - 1

    def partition(self):
        """subject id -> leaf node id."""
        return {sid: leaf.id for leaf in self.leaves() for sid in leaf.subject_ids}

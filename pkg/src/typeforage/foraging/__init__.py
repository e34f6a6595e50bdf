from .world import (
    ACTION_NAMES,
    N_TYPES,
    PARAM_BOUNDS,
    TYPE_NAMES,
    ForagingState,
    Instance,
    WorldConfig,
    generate_instance,
    step_world,
)
from .types import (
    ForagingHistory,
    ForagingSnapshot,
    ForagingType,
    HistoryWindow,
    astar_path,
    choose_target_f1,
    choose_target_f2,
    choose_target_l1,
    choose_target_l2,
    foraging_type_step,
    make_type_space,
    view_certainty,
    visible_agents_and_items,
)

__all__ = [
    "ACTION_NAMES",
    "N_TYPES",
    "PARAM_BOUNDS",
    "TYPE_NAMES",
    "ForagingState",
    "Instance",
    "WorldConfig",
    "generate_instance",
    "step_world",
    "ForagingHistory",
    "ForagingSnapshot",
    "ForagingType",
    "HistoryWindow",
    "astar_path",
    "choose_target_f1",
    "choose_target_f2",
    "choose_target_l1",
    "choose_target_l2",
    "foraging_type_step",
    "make_type_space",
    "view_certainty",
    "visible_agents_and_items",
]

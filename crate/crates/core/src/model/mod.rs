//! Instances, skill compositions, route evaluation and columns.

pub mod builder;
pub mod column;
pub mod compositions;
pub mod instance;
pub mod io;
pub mod route;
pub mod travel;

pub use builder::InstanceBuilder;
pub use column::{artificial_column, earliest_singleton, plan_cost_cap, worst_case_total, worst_task_cost, Column, ColumnKey};
pub use compositions::{enumerate_skill_compositions, SkillComposition};
pub use instance::{
    Instance, InstanceError, InstanceSpec, ObjectiveBasis, Profile, Task, TimeBins, TravelData, Workforce,
};
pub use io::{instance_from_json, instance_to_json, load_instance, save_instance, IoError};
pub use route::{
    check_route_feasibility, evaluate_route, leave_time_range, propagate_finish, return_time, route_cost, task_feasible, Propagation,
    RouteError, RouteEvaluation,
};
pub use travel::{EdgeTravel, TravelModel};

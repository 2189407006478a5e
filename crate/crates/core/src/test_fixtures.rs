pub const BLOCKSWORLD_DOMAIN: &str = include_str!("../fixtures/blocksworld/domain.pddl");
pub const BLOCKSWORLD_P3: &str = include_str!("../fixtures/blocksworld/p3.pddl");
pub const GRIPPER_DOMAIN: &str = include_str!("../fixtures/gripper/domain.pddl");
pub const GRIPPER_P2: &str = include_str!("../fixtures/gripper/p2.pddl");
pub const SPANNER_DOMAIN: &str = include_str!("../fixtures/spanner/domain.pddl");
pub const SPANNER_DEGENERATE: &str = include_str!("../fixtures/spanner/degenerate.pddl");
pub const DELIVERY_DOMAIN: &str = include_str!("../fixtures/delivery/domain.pddl");
pub const DELIVERY_N1: &str = include_str!("../fixtures/delivery/n1.pddl");

pub fn task(domain: &str, instance: &str) -> crate::ground::Task {
    let d = crate::pddl::parse_domain(domain).unwrap();
    let i = crate::pddl::parse_instance(instance, &d).unwrap();
    crate::ground::Task::new(d, i).unwrap()
}

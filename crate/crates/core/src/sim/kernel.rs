use super::controller::{controller_update, WorldView};
use super::{frame_time, AgentMeta, AgentState, CollisionRecord, Frame, ScenarioLog, Termination, DT};
use crate::geometry::{obb_overlap, Pose2, Vec2};
use crate::scenario::{AgentSpec, IntersectionMap, ScenarioConfig, SpawnPlan};

/// First overlapping pair in ascending id order (pedestrian pairs excluded)
/// and the midpoint of their centers.
pub fn detect_collision(frame: &Frame) -> Option<([u32; 2], Vec2)> {
    let agents = &frame.agents;
    let boxes: Vec<_> = agents.iter().map(AgentState::obb).collect();
    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.sort_by_key(|&i| agents[i].id);
    for (oi, &i) in order.iter().enumerate() {
        for &j in &order[oi + 1..] {
            let (a, b) = (&agents[i], &agents[j]);
            if a.class.is_pedestrian() && b.class.is_pedestrian() {
                continue;
            }
            if obb_overlap(&boxes[i], &boxes[j]) {
                return Some(([a.id, b.id], (a.position() + b.position()) * 0.5));
            }
        }
    }
    None
}

/// Mutable simulation state. Agents are kept sorted by id.
pub struct Simulation<'a> {
    map: &'a IntersectionMap,
    specs: Vec<AgentSpec>,
    states: Vec<AgentState>,
    completed: Vec<bool>,
    k: usize,
}

impl<'a> Simulation<'a> {
    pub fn new(plan: &SpawnPlan, map: &'a IntersectionMap) -> Self {
        let mut specs = plan.agents.clone();
        specs.sort_by_key(|a| a.id);
        let states: Vec<AgentState> = specs
            .iter()
            .map(|a| AgentState {
                id: a.id,
                class: a.class,
                x: a.initial_pose.x,
                y: a.initial_pose.y,
                yaw: a.initial_pose.yaw,
                speed: a.initial_speed.clamp(0.0, a.max_speed),
                length: a.length,
                width: a.width,
                s: a.start_s,
            })
            .collect();
        let completed = specs.iter().map(|a| a.start_s >= a.end_s).collect();
        Self { map, specs, states, completed, k: 0 }
    }

    pub fn frame(&self) -> Frame {
        Frame { t: frame_time(self.k), agents: self.states.clone() }
    }

    pub fn frame_index(&self) -> usize {
        self.k
    }

    pub fn is_completed(&self, id: u32) -> bool {
        self.specs.iter().position(|a| a.id == id).is_some_and(|i| self.completed[i])
    }

    /// Advances all agents by one 0.1 s step.
    pub fn step(&mut self) {
        let t = frame_time(self.k);
        let commands: Vec<_> = {
            let view =
                WorldView { t, states: &self.states, specs: &self.specs, completed: &self.completed, map: self.map };
            (0..self.states.len())
                .map(|i| (!self.completed[i] && !self.states[i].class.is_pedestrian()).then(|| controller_update(i, &view)))
                .collect()
        };
        for (i, cmd) in commands.into_iter().enumerate() {
            if self.completed[i] {
                continue;
            }
            let spec = &self.specs[i];
            let st = &mut self.states[i];
            if st.class.is_pedestrian() {
                let s = (st.s + st.speed * DT).min(spec.end_s);
                let p = spec.trajectory.point_at(s);
                st.set_pose(Pose2::from_parts(p, spec.trajectory.heading_at(s)));
                st.s = s;
            } else {
                let cmd = cmd.expect("vehicle command");
                let v = (st.speed + cmd.accel * DT).clamp(0.0, spec.max_speed);
                let yaw = st.yaw + v * cmd.curvature * DT;
                let p = st.position() + Vec2::from_angle(yaw) * (v * DT);
                st.set_pose(Pose2::from_parts(p, yaw));
                st.speed = v;
                let (s, _) = spec.trajectory.project_window(p, st.s - 1.0, st.s + v * DT + 2.0);
                st.s = s.max(st.s);
            }
            if st.s >= spec.end_s {
                self.completed[i] = true;
                st.speed = 0.0;
            }
        }
        self.k += 1;
    }
}

/// Advances `sim` by one frame and returns the new frame.
pub fn step(sim: &mut Simulation<'_>) -> Frame {
    sim.step();
    sim.frame()
}

/// Runs a plan until collision, ego completion, or the duration cap.
pub fn run_scenario(plan: &SpawnPlan, config: &ScenarioConfig, map: &IntersectionMap) -> ScenarioLog {
    let mut sim = Simulation::new(plan, map);
    let ego = plan.v2x.ego;
    let cap_frames = (config.duration_cap * f64::from(super::FRAME_HZ)).round() as usize;
    let mut frames = vec![sim.frame()];
    let mut collision = None;
    let termination = loop {
        let frame = step(&mut sim);
        let k = sim.frame_index();
        let hit = detect_collision(&frame);
        frames.push(frame);
        if let Some((ids, contact)) = hit {
            collision = Some(CollisionRecord { ids, contact, t: frame_time(k) });
            break Termination::Collision;
        }
        if sim.is_completed(ego) {
            break Termination::TrajectoryComplete;
        }
        if k >= cap_frames {
            break Termination::Timeout;
        }
    };
    let mut agents: Vec<AgentMeta> = plan
        .agents
        .iter()
        .map(|a| AgentMeta { id: a.id, class: a.class, role: a.role, length: a.length, width: a.width, max_speed: a.max_speed })
        .collect();
    agents.sort_by_key(|a| a.id);
    ScenarioLog {
        config: config.clone(),
        map_digest: map.digest(),
        agents,
        infrastructure: plan.infrastructure,
        v2x: plan.v2x,
        frames,
        collision,
        termination,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{
        build_scenario, AgentClass, Arm, Maneuver, Role, ScenarioType, Topology, Trajectory, V2xSlots,
    };
    use crate::sim::{B_MAX, HEADWAY_S};

    fn state(id: u32, x: f64, y: f64, yaw: f64) -> AgentState {
        AgentState { id, class: AgentClass::Car, x, y, yaw, speed: 0.0, length: 4.0, width: 2.0, s: 0.0 }
    }

    fn straight_spec(id: u32, role: Role, x0: f64, speed: f64, start_speed: f64) -> AgentSpec {
        let trajectory = Trajectory::from_points(&[Vec2::new(-200.0, 0.0), Vec2::new(200.0, 0.0)], speed).unwrap();
        AgentSpec {
            id,
            class: AgentClass::Car,
            role,
            length: 4.0,
            width: 2.0,
            start_s: x0 + 200.0,
            end_s: trajectory.length(),
            trajectory,
            initial_speed: start_speed,
            max_speed: speed,
            initial_pose: Pose2::new(x0, 0.0, 0.0),
            stop_s: None,
            axis: None,
        }
    }

    fn plan_of(agents: Vec<AgentSpec>) -> SpawnPlan {
        let map = crate::scenario::build_map(Topology::FourWay, false, 0);
        SpawnPlan {
            scenario_type: ScenarioType::Normal,
            agents,
            infrastructure: map.infrastructure,
            v2x: V2xSlots { ego: 1, behind: None, other: None, other_follower: None },
            conflict: None,
        }
    }

    fn empty_map() -> IntersectionMap {
        let mut m = crate::scenario::build_map(Topology::FourWay, false, 0);
        m.buildings.clear();
        m
    }

    #[test]
    fn collision_none_when_apart() {
        let f = Frame { t: 0.0, agents: vec![state(1, 0.0, 0.0, 0.0), state(2, 10.0, 0.0, 0.0)] };
        assert!(detect_collision(&f).is_none());
    }

    #[test]
    fn pileup_reports_lowest_pair() {
        let f = Frame {
            t: 0.0,
            agents: vec![state(7, 0.0, 0.0, 0.0), state(3, 3.0, 0.0, 0.0), state(5, 1.5, 1.0, 1.0), state(9, 50.0, 0.0, 0.0)],
        };
        let (ids, contact) = detect_collision(&f).unwrap();
        assert_eq!(ids, [3, 5]);
        assert_eq!(contact, Vec2::new(2.25, 0.5));
    }

    #[test]
    fn pedestrians_do_not_collide_with_each_other() {
        let mut a = state(1, 0.0, 0.0, 0.0);
        let mut b = state(2, 0.1, 0.0, 0.0);
        a.class = AgentClass::Pedestrian;
        b.class = AgentClass::Pedestrian;
        assert!(detect_collision(&Frame { t: 0.0, agents: vec![a, b] }).is_none());
    }

    #[test]
    fn constant_speed_moves_one_meter() {
        let map = empty_map();
        let plan = plan_of(vec![straight_spec(1, Role::Background, -100.0, 10.0, 10.0)]);
        let mut sim = Simulation::new(&plan, &map);
        let f = step(&mut sim);
        let a = f.agent(1).unwrap();
        assert!((a.x - (-99.0)).abs() < 1e-9 && a.y.abs() < 1e-9);
    }

    #[test]
    fn stationary_agent_stays() {
        let map = empty_map();
        let mut spec = straight_spec(1, Role::Background, -100.0, 10.0, 0.0);
        spec.max_speed = 0.0;
        let plan = plan_of(vec![spec]);
        let mut sim = Simulation::new(&plan, &map);
        let before = sim.frame();
        let after = step(&mut sim);
        assert_eq!(before.agents[0].pose(), after.agents[0].pose());
    }

    #[test]
    fn stopped_leader_two_meters_ahead_brakes_fully() {
        let map = empty_map();
        // Follower at 5 m/s; leader's rear bumper 2 m ahead of follower's front bumper.
        let plan = plan_of(vec![
            straight_spec(1, Role::Background, -100.0, 10.0, 5.0),
            straight_spec(2, Role::Background, -94.0, 0.0, 0.0),
        ]);
        let mut specs = plan.agents.clone();
        specs[1].max_speed = 1e-9;
        let mut sim = Simulation::new(&plan, &map);
        let f = sim.frame();
        let view = WorldView { t: 0.0, states: &f.agents, specs: &specs, completed: &[false, false], map: &map };
        let cmd = controller_update(0, &view);
        assert_eq!(cmd.accel, -B_MAX);
        let f2 = step(&mut sim);
        assert!((f2.agent(1).unwrap().speed - 4.4).abs() < 1e-12);
        let _ = HEADWAY_S;
    }

    #[test]
    fn empty_road_accelerates() {
        let map = empty_map();
        let plan = plan_of(vec![straight_spec(1, Role::Background, -100.0, 10.0, 4.0)]);
        let sim = Simulation::new(&plan, &map);
        let f = sim.frame();
        let view = WorldView { t: 0.0, states: &f.agents, specs: &plan.agents, completed: &[false], map: &map };
        assert!(controller_update(0, &view).accel > 0.0);
    }

    #[test]
    fn red_light_stops_before_line() {
        let mut map = crate::scenario::build_map(Topology::FourWay, true, 2);
        let lp = map.light_program.as_mut().unwrap();
        lp.offset = 13.0; // north-south axis red from t = 0 for 13 s
        let route = map.route(Arm::South, Maneuver::Straight).unwrap().clone();
        let v = 8.0;
        let start = route.stop_s - 10.0 - 2.25; // front bumper 10 m from the line
        assert!(v * v / (2.0 * B_MAX) < 10.0);
        let traj = route.trajectory.clone().with_speed(v);
        let spec = AgentSpec {
            id: 5,
            class: AgentClass::Car,
            role: Role::Background,
            length: 4.5,
            width: 1.9,
            initial_pose: Pose2::from_parts(traj.point_at(start), traj.heading_at(start)),
            trajectory: traj,
            start_s: start,
            end_s: route.trajectory.length(),
            initial_speed: v,
            max_speed: v,
            stop_s: Some(route.stop_s),
            axis: Some(route.approach.axis()),
        };
        let mut plan = plan_of(vec![spec]);
        plan.v2x.ego = 5;
        let mut sim = Simulation::new(&plan, &map);
        for _ in 0..80 {
            sim.step();
        }
        let a = sim.frame().agents[0];
        assert!(a.speed < 0.05, "speed {}", a.speed);
        assert!(a.s + 0.5 * a.length <= route.stop_s, "front at {} line at {}", a.s + 2.25, route.stop_s);
    }

    fn run(n: u8, seed: u64) -> ScenarioLog {
        let mut c = ScenarioConfig::new(ScenarioType::Accident(n), seed);
        c.n_background_vehicles = 2;
        c.n_pedestrians = 2;
        let (map, plan) = build_scenario(&c).unwrap();
        run_scenario(&plan, &c, &map)
    }

    #[test]
    fn accident_scenarios_mostly_collide() {
        let mut hits = 0;
        let mut total = 0;
        for n in 1..=12 {
            for seed in 0..5 {
                let log = run(n, seed * 31 + u64::from(n));
                total += 1;
                if log.termination == Termination::Collision {
                    hits += 1;
                }
            }
        }
        assert!(hits * 10 >= total * 7, "{hits}/{total}");
    }

    #[test]
    fn log_invariants() {
        for seed in 0..6 {
            let log = run(1 + (seed % 12) as u8, seed);
            for (k, f) in log.frames.iter().enumerate() {
                assert_eq!(f.t, frame_time(k));
            }
            assert!(log.frames.len() <= 101);
            for w in log.frames.windows(2) {
                for (a, b) in w[0].agents.iter().zip(&w[1].agents) {
                    let vmax = log.meta(a.id).unwrap().max_speed;
                    assert!(a.position().distance(b.position()) <= vmax * 0.1 + 0.01);
                }
            }
            if let Some(c) = log.collision {
                let last = log.frames.last().unwrap();
                let box_of = |f: &Frame, id| f.agent(id).unwrap().obb();
                assert!(obb_overlap(&box_of(last, c.ids[0]), &box_of(last, c.ids[1])));
                for f in &log.frames[..log.frames.len() - 1] {
                    assert!(!obb_overlap(&box_of(f, c.ids[0]), &box_of(f, c.ids[1])));
                }
            }
        }
    }

    #[test]
    fn deterministic_runs() {
        assert_eq!(run(4, 17), run(4, 17));
    }

    #[test]
    fn normal_short_route_completes() {
        let mut completes = 0;
        for seed in 0..10 {
            let c = ScenarioConfig::new(ScenarioType::Normal, seed);
            let (map, plan) = build_scenario(&c).unwrap();
            let log = run_scenario(&plan, &c, &map);
            if log.termination == Termination::TrajectoryComplete {
                completes += 1;
            }
        }
        assert!(completes >= 5, "{completes}");
    }

    #[test]
    fn slow_ego_times_out_at_cap() {
        let map = empty_map();
        let plan = plan_of(vec![straight_spec(1, Role::Background, -100.0, 2.0, 2.0)]);
        let c = ScenarioConfig::new(ScenarioType::Normal, 0);
        let log = run_scenario(&plan, &c, &map);
        assert_eq!(log.termination, Termination::Timeout);
        assert_eq!(log.frames.len(), 101);
        assert_eq!(log.frames.last().unwrap().t, 10.0);
    }
}

//! In-process bench: a simulated RAN, one E2 agent per node, and a RIC,
//! with every PDU passed through the binary codec on the way.

#![allow(dead_code)]

pub mod apps;
pub mod lifecycle;
pub mod oracle;
pub mod physics;
pub mod policy;
pub mod gen;

use oran_core::e2ap::{self, E2apPdu};
use oran_core::ids::NodeId;
use oran_core::ric::xapp::{XApp, XappDescriptor};
use oran_core::ric::{Ric, RicConfig};
use oran_core::sim::agent::E2Agent;
use oran_core::sim::config::SimConfig;
use oran_core::sim::{Sim, SimEvent};

pub struct Bench {
    pub sim: Sim,
    pub agents: Vec<E2Agent>,
    pub ric: Ric,
    /// Every PDU that crossed the wire, in order, with its direction.
    pub wire: Vec<(bool, E2apPdu)>,
    /// Simulator events, in order.
    pub events: Vec<SimEvent>,
    inbox: Vec<(usize, E2apPdu)>,
}

fn through_codec(pdu: &E2apPdu) -> E2apPdu {
    e2ap::decode(&e2ap::encode(pdu).expect("encodes")).expect("decodes")
}

impl Bench {
    pub fn new(cfg: &SimConfig) -> Bench {
        Bench::with_ric(cfg, RicConfig::default())
    }

    pub fn with_ric(cfg: &SimConfig, ric_cfg: RicConfig) -> Bench {
        let sim = Sim::new(cfg, 1).expect("valid sim config");
        let agents: Vec<E2Agent> = cfg
            .nodes
            .iter()
            .map(|n| E2Agent::new(&sim, &NodeId::new(&n.id), &n.functions, n.pm_interval_ms))
            .collect();
        let mut b = Bench {
            sim,
            agents,
            ric: Ric::new(ric_cfg),
            wire: Vec::new(),
            events: Vec::new(),
            inbox: Vec::new(),
        };
        for i in 0..b.agents.len() {
            b.ric.connection_opened(i);
            let setup = b.agents[i].setup_request();
            b.inbox.push((i, setup));
        }
        b.pump();
        b
    }

    pub fn deploy(&mut self, desc: XappDescriptor, app: Box<dyn XApp>) {
        let name = desc.name.clone();
        self.ric.onboard(desc).expect("onboard");
        self.ric.deploy(&name, app).expect("deploy");
        self.pump();
    }

    /// Node-to-RIC frames queued so far are delivered, then RIC replies go
    /// back to the nodes, until nothing moves.
    pub fn pump(&mut self) {
        loop {
            let inbox = std::mem::take(&mut self.inbox);
            for (conn, pdu) in inbox {
                let pdu = through_codec(&pdu);
                self.wire.push((true, pdu.clone()));
                self.ric.handle_e2(conn, pdu);
            }
            self.ric.run_until_quiescent();
            let out = self.ric.take_outbox();
            if out.is_empty() && self.inbox.is_empty() {
                break;
            }
            for (conn, pdu) in out {
                let pdu = through_codec(&pdu);
                self.wire.push((false, pdu.clone()));
                let replies = self.agents[conn].handle(&mut self.sim, pdu);
                self.inbox.extend(replies.into_iter().map(|r| (conn, r)));
            }
        }
    }

    /// One millisecond of simulated time on both sides.
    pub fn step(&mut self) {
        self.sim.step();
        let events = self.sim.take_events();
        for (i, a) in self.agents.iter_mut().enumerate() {
            for pdu in a.after_step(&self.sim, &events) {
                self.inbox.push((i, pdu));
            }
        }
        self.events.extend(events);
        self.ric.set_now(self.sim.now());
        self.pump();
        self.ric.tick();
        self.pump();
    }

    pub fn run(&mut self, ms: u64) {
        for _ in 0..ms {
            self.step();
        }
    }

    pub fn sent_to_ric(&self, pred: impl Fn(&E2apPdu) -> bool) -> usize {
        self.wire.iter().filter(|(up, p)| *up && pred(p)).count()
    }

    pub fn sent_from_ric(&self, pred: impl Fn(&E2apPdu) -> bool) -> usize {
        self.wire.iter().filter(|(up, p)| !*up && pred(p)).count()
    }
}

/// One node, one cell of `prb` PRBs holding the given slices.
pub fn single_cell(prb: u32, slices: &str) -> SimConfig {
    let text = format!(
        r#"
[[nodes]]
id = "gnb-1"

[[cells]]
id = 1
node = "gnb-1"
total_prb = {prb}
slices = [{slices}]
"#
    );
    toml::from_str(&text).expect("valid config")
}

//! Desk-scale O-RAN control plane: E2 protocol stack, near-RT RIC with xApps,
//! non-RT RIC, a deterministic simulated RAN and the AI/ML model workflow.

pub mod e2ap;
pub mod e2sm;
pub mod ids;
pub mod tlv;
pub mod transport;
pub mod sim;
pub mod a1;
pub mod ric;
pub mod xapps;
pub mod nonrt;
pub mod harness;
pub mod mlops;

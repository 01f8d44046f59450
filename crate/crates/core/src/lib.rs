//! Reactive-power sensitivity and capacitor planning for islanded
//! microgrids with high PV penetration.

pub mod acopf;
pub mod error;
pub mod grid;
pub mod io;
pub mod planning;
pub mod sensitivity;
pub mod study;

pub use acopf::{
    kkt_report, objective_cost, residuals, solve, KktReport, Objective, ObjectiveOptions,
    OpfProblem, OpfSolution, OpfState, SolveStatus, SolverOptions,
};
pub use error::{Error, Result};
pub use grid::{
    Branch, BranchStatus, Bus, BusId, BusKind, DemandSeries, Generator, Network, PfSign, PvUnit,
    QuadraticCost, ShuntCapacitor,
};

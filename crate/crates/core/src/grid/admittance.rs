use nalgebra::{Complex, DMatrix};

use super::{BranchStatus, Network};

/// Dense complex bus admittance matrix `Y = G + jB`, indexed by bus position.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    y: DMatrix<Complex<f64>>,
}

impl AdmittanceMatrix {
    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.y[(i, j)].re
    }

    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.y[(i, j)].im
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<f64> {
        self.y[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex<f64>> {
        &self.y
    }
}

pub fn build_admittance(net: &Network) -> AdmittanceMatrix {
    let n = net.n_bus();
    let mut y = DMatrix::from_element(n, n, Complex::new(0.0, 0.0));
    for br in net
        .branches()
        .iter()
        .filter(|b| b.status == BranchStatus::Closed)
    {
        let f = net.bus_index(br.from).expect("validated");
        let t = net.bus_index(br.to).expect("validated");
        let ys = Complex::new(1.0, 0.0) / Complex::new(br.r, br.x);
        let ych = Complex::new(0.0, br.b_sh / 2.0);
        y[(f, f)] += ys + ych;
        y[(t, t)] += ys + ych;
        y[(f, t)] -= ys;
        y[(t, f)] -= ys;
    }
    for sh in net.shunts() {
        let k = net.bus_index(sh.bus).expect("validated");
        y[(k, k)] += Complex::new(0.0, sh.b_cap);
    }
    AdmittanceMatrix { y }
}

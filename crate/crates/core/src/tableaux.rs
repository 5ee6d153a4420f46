//! Butcher tableaux for the time-stepping methods.

/// Explicit Runge-Kutta method: `a` strictly lower triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitTableau {
    pub name: &'static str,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub order: u32,
}

impl ExplicitTableau {
    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

/// An explicit method of order `p` together with a second weight row of
/// order `p − 1` that shares its stages.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedTableau {
    pub method: ExplicitTableau,
    pub b_hat: Vec<f64>,
    pub order_hat: u32,
}

/// Fully implicit Runge-Kutta method.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitTableau {
    pub name: &'static str,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub order: u32,
}

impl ImplicitTableau {
    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

fn row_sums(a: &[Vec<f64>]) -> Vec<f64> {
    a.iter().map(|row| row.iter().sum()).collect()
}

/// Classical fourth-order Runge-Kutta method.
pub fn rk4() -> ExplicitTableau {
    let a = vec![
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.0, 0.0],
        vec![0.0, 0.5, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
    ];
    ExplicitTableau {
        name: "rk4",
        c: vec![0.0, 0.5, 0.5, 1.0],
        a,
        b: vec![1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0],
        order: 4,
    }
}

/// Dormand-Prince 5(4) pair. The last stage is evaluated at the fifth-order
/// solution (first same as last), so `a[6] == b`.
pub fn dopri54() -> EmbeddedTableau {
    let a = vec![
        vec![0.0; 7],
        vec![1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0, 0.0],
        vec![
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
            0.0,
        ],
        vec![
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
            0.0,
        ],
        vec![
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
            0.0,
        ],
    ];
    let b = a[6].clone();
    let b_hat = vec![
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    EmbeddedTableau {
        method: ExplicitTableau {
            name: "dopri54",
            c: vec![0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0],
            a,
            b,
            order: 5,
        },
        b_hat,
        order_hat: 4,
    }
}

/// Two-stage Gauss-Legendre collocation method (order 4).
pub fn gauss2() -> ImplicitTableau {
    let r = 3f64.sqrt() / 6.0;
    let a = vec![vec![0.25, 0.25 - r], vec![0.25 + r, 0.25]];
    let c = row_sums(&a);
    ImplicitTableau {
        name: "gauss2",
        a,
        b: vec![0.5, 0.5],
        c,
        order: 4,
    }
}

#[cfg(test)]
pub(crate) mod order_conditions {
    //! Elementary-weight evaluation over rooted trees. A tree is stored as
    //! the sorted list of its root's subtrees.

    #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
    pub struct Tree(pub Vec<Tree>);

    impl Tree {
        pub fn order(&self) -> usize {
            1 + self.0.iter().map(Tree::order).sum::<usize>()
        }

        /// Tree density `γ(t)`.
        pub fn density(&self) -> f64 {
            self.order() as f64 * self.0.iter().map(Tree::density).product::<f64>()
        }

        /// Per-stage weights `Φ_i(t) = Π_children Σ_j a_ij Φ_j(child)`.
        pub fn stage_weights(&self, a: &[Vec<f64>]) -> Vec<f64> {
            let s = a.len();
            let mut w = vec![1.0; s];
            for child in &self.0 {
                let cw = child.stage_weights(a);
                for i in 0..s {
                    w[i] *= (0..s).map(|j| a[i][j] * cw[j]).sum::<f64>();
                }
            }
            w
        }
    }

    /// All rooted trees with exactly `n` vertices.
    pub fn trees(n: usize) -> Vec<Tree> {
        if n == 1 {
            return vec![Tree(vec![])];
        }
        let mut out = Vec::new();
        forests(n - 1, n - 1, &mut Vec::new(), &mut out);
        out.sort();
        out.dedup();
        out
    }

    // Multisets of trees of total order `remaining`, each part order <= max.
    fn forests(remaining: usize, max: usize, current: &mut Vec<Tree>, out: &mut Vec<Tree>) {
        if remaining == 0 {
            let mut children = current.clone();
            children.sort();
            out.push(Tree(children));
            return;
        }
        for k in (1..=remaining.min(max)).rev() {
            for t in trees(k) {
                if let Some(last) = current.last() {
                    if last.order() == k && &t > last {
                        continue;
                    }
                }
                current.push(t);
                forests(remaining - k, k, current, out);
                current.pop();
            }
        }
    }

    /// Largest `|b·Φ(t) − 1/γ(t)|` over all trees of order <= `p`.
    pub fn max_defect(a: &[Vec<f64>], b: &[f64], p: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 1..=p {
            for t in trees(n) {
                let w = t.stage_weights(a);
                let lhs: f64 = b.iter().zip(&w).map(|(bi, wi)| bi * wi).sum();
                worst = worst.max((lhs - 1.0 / t.density()).abs());
            }
        }
        worst
    }
}

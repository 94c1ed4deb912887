use crate::config::Kind;

pub struct Entry {
    pub kind: Kind,
    pub description: &'static str,
    /// Property of the equation the experiment probes.
    pub target: &'static str,
}

pub fn catalog() -> Vec<Entry> {
    Kind::ALL
        .iter()
        .map(|&kind| {
            let (description, target) = match kind {
                Kind::GreenChecks => (
                    "mass, semigroup residual, Lambda anchors and the beta integral of the stable kernel",
                    "stable Green function: normalisation and semigroup law",
                ),
                Kind::KernelChecks => (
                    "resolvent kernel K of the moment recursion against its closed form",
                    "second-moment kernel series",
                ),
                Kind::ApproxLadder => (
                    "series f_b, mass identity and L1/L2 errors of the discrete-generator kernel",
                    "approximation of the semigroup by the compound-Poisson kernel",
                ),
                Kind::Simulate => (
                    "ensemble of mild-scheme paths: mean against J0 and second moment against its bound",
                    "existence and the two-sided moment bound",
                ),
                Kind::Compare => (
                    "coupled runs from ordered initial data driven by the same noise",
                    "weak comparison principle",
                ),
                Kind::Positivity => (
                    "lower tail of the box minimum against the log-log transform of eps",
                    "strict positivity and its small-ball tail",
                ),
                Kind::Holder => (
                    "log-log slopes of mean squared time and space increments",
                    "space-time Holder regularity",
                ),
                Kind::WeakConvergence => (
                    "E(<u(t), phi> - <mu, phi>)^2 as t decreases to 0",
                    "weak convergence to the initial measure",
                ),
                Kind::Intermittency => (
                    "growth rate of log E u^p over the upper half of a time ladder",
                    "moment Lyapunov exponents and intermittency",
                ),
            };
            Entry { kind, description, target }
        })
        .collect()
}

pub fn render() -> String {
    let mut s = String::new();
    for e in catalog() {
        s.push_str(&format!(
            "{:<17} {}\n{:<17} target: {}\n",
            e.kind.name(),
            e.description,
            "",
            e.target
        ));
    }
    s
}

use std::fmt;

use super::RctbnError;

/// Conditional intensity matrix: non-negative off-diagonal rates, each diagonal entry
/// the negated sum of its row's off-diagonal rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Cim {
    states: usize,
    rates: Vec<f64>,
}

impl Cim {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Cim, RctbnError> {
        let r = rows.len();
        if r < 2 {
            return Err(RctbnError::Cim(format!("need at least 2 states, found {r}")));
        }
        let mut rates = Vec::with_capacity(r * r);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != r {
                return Err(RctbnError::Cim(format!("row {k} has {} entries, expected {r}", row.len())));
            }
            let mut off = 0.0;
            for (j, &q) in row.iter().enumerate() {
                if !q.is_finite() {
                    return Err(RctbnError::Cim(format!("entry ({k},{j}) is not finite")));
                }
                if j != k {
                    if q < 0.0 {
                        return Err(RctbnError::Cim(format!("off-diagonal entry ({k},{j}) = {q} is negative")));
                    }
                    off += q;
                }
            }
            if (row[k] + off).abs() > 1e-9 * off.max(1.0) {
                return Err(RctbnError::Cim(format!("row {k} does not sum to zero")));
            }
            rates.extend(row);
        }
        Ok(Cim { states: r, rates })
    }

    /// Parses rows separated by `;`, entries by `,`.
    pub fn parse(text: &str) -> Result<Cim, RctbnError> {
        let rows = text
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| RctbnError::Cim(format!("bad number `{x}`"))))
                    .collect()
            })
            .collect::<Result<Vec<Vec<f64>>, _>>()?;
        Cim::new(rows)
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from * self.states + to]
    }

    /// Total rate of leaving `state`.
    pub fn exit_rate(&self, state: usize) -> f64 {
        -self.rate(state, state)
    }
}

impl fmt::Display for Cim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, row) in self.rates.chunks(self.states).enumerate() {
            if k > 0 {
                f.write_str(";")?;
            }
            let cells: Vec<String> = row.iter().map(|q| format!("{q:?}")).collect();
            f.write_str(&cells.join(","))?;
        }
        Ok(())
    }
}

/// CIMs of one clause for `variable`, one per joint configuration of `parents`
/// (first parent fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalCim {
    pub variable: usize,
    pub parents: Vec<usize>,
    pub cims: Vec<Cim>,
}

/// Joint intensity matrix over the product space of `states`, variable 0 fastest.
///
/// Each clause contributes its active CIM's rates to the single-variable changes of
/// its head; clauses sharing a head add. Entries for two or more simultaneous changes
/// stay zero.
pub fn amalgamate(states: &[usize], clauses: &[ConditionalCim]) -> Result<Vec<Vec<f64>>, RctbnError> {
    let n = states.len();
    if states.contains(&0) {
        return Err(RctbnError::Dimension("every variable needs at least one state".into()));
    }
    let mut stride = vec![1usize; n];
    for v in 1..n {
        stride[v] = stride[v - 1] * states[v - 1];
    }
    let size: usize = states.iter().product();
    for (c, cl) in clauses.iter().enumerate() {
        if cl.variable >= n {
            return Err(RctbnError::Dimension(format!("clause {c}: variable {} out of range", cl.variable)));
        }
        for (i, &p) in cl.parents.iter().enumerate() {
            if p >= n || p == cl.variable || cl.parents[..i].contains(&p) {
                return Err(RctbnError::Dimension(format!("clause {c}: bad parent {p}")));
            }
        }
        let configs: usize = cl.parents.iter().map(|&p| states[p]).product();
        if cl.cims.len() != configs {
            return Err(RctbnError::Dimension(format!("clause {c}: {} CIMs for {configs} parent configurations", cl.cims.len())));
        }
        if let Some(bad) = cl.cims.iter().find(|m| m.states() != states[cl.variable]) {
            return Err(RctbnError::Dimension(format!(
                "clause {c}: CIM has {} states, variable has {}",
                bad.states(),
                states[cl.variable]
            )));
        }
    }

    let mut q = vec![vec![0.0; size]; size];
    for (s, row) in q.iter_mut().enumerate() {
        let digit = |v: usize| (s / stride[v]) % states[v];
        for cl in clauses {
            let mut config = 0;
            let mut scale = 1;
            for &p in &cl.parents {
                config += digit(p) * scale;
                scale *= states[p];
            }
            let cim = &cl.cims[config];
            let v = cl.variable;
            let k = digit(v);
            row[s] += cim.rate(k, k);
            for to in (0..states[v]).filter(|&to| to != k) {
                row[s + to * stride[v] - k * stride[v]] += cim.rate(k, to);
            }
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kron(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (n, m) = (a.len(), b.len());
        let mut out = vec![vec![0.0; n * m]; n * m];
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    for l in 0..m {
                        out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                    }
                }
            }
        }
        out
    }

    fn eye(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect()
    }

    fn projector(n: usize, k: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == k && j == k))).collect()).collect()
    }

    fn dense(c: &Cim) -> Vec<Vec<f64>> {
        (0..c.states()).map(|i| (0..c.states()).map(|j| c.rate(i, j)).collect()).collect()
    }

    /// Expands every clause to the joint space as a sum of Kronecker products (last
    /// variable outermost) and adds the expansions.
    fn expand_and_sum(states: &[usize], clauses: &[ConditionalCim]) -> Vec<Vec<f64>> {
        let size: usize = states.iter().product();
        let mut total = vec![vec![0.0; size]; size];
        for cl in clauses {
            for (config, cim) in cl.cims.iter().enumerate() {
                let mut parent_state = vec![0; states.len()];
                let mut rest = config;
                for &p in &cl.parents {
                    parent_state[p] = rest % states[p];
                    rest /= states[p];
                }
                let mut m = vec![vec![1.0]];
                for v in (0..states.len()).rev() {
                    let factor = if v == cl.variable {
                        dense(cim)
                    } else if cl.parents.contains(&v) {
                        projector(states[v], parent_state[v])
                    } else {
                        eye(states[v])
                    };
                    m = kron(&m, &factor);
                }
                for i in 0..size {
                    for j in 0..size {
                        total[i][j] += m[i][j];
                    }
                }
            }
        }
        total
    }

    fn cim(a: f64, b: f64) -> Cim {
        Cim::new(vec![vec![-a, a], vec![b, -b]]).unwrap()
    }

    #[test]
    fn three_variable_cvd_example() {
        // [cvd, hyp, bmi]; cvd | hyp, cvd | bmi, hyp and bmi unconditioned
        let states = [2, 2, 2];
        let clauses = vec![
            ConditionalCim { variable: 0, parents: vec![1], cims: vec![cim(0.1, 0.02), cim(0.7, 0.05)] },
            ConditionalCim { variable: 0, parents: vec![2], cims: vec![cim(0.03, 0.01), cim(0.4, 0.08)] },
            ConditionalCim { variable: 1, parents: vec![], cims: vec![cim(0.2, 0.3)] },
            ConditionalCim { variable: 2, parents: vec![], cims: vec![cim(0.15, 0.25)] },
        ];
        let q = amalgamate(&states, &clauses).unwrap();
        let oracle = expand_and_sum(&states, &clauses);
        assert_eq!(q, oracle);
        let mut double = 0;
        for (i, row) in q.iter().enumerate() {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
            for (j, &x) in row.iter().enumerate() {
                if i != j {
                    assert!(x >= 0.0);
                }
                if (i ^ j).count_ones() >= 2 {
                    assert_eq!(x, 0.0);
                }
                if (i ^ j).count_ones() == 2 {
                    double += 1;
                }
            }
        }
        assert_eq!(double, 24);
        // state 0b010: cvd=0, hyp=1, bmi=0; cvd onset rate adds both clauses
        assert_eq!(q[0b010][0b011], 0.7 + 0.03);
    }

    #[test]
    fn single_variable_and_additive_heads() {
        let c = Cim::parse("-1.5,1.0,0.5;0.2,-0.2,0.0;0.0,3.0,-3.0").unwrap();
        let q = amalgamate(&[3], &[ConditionalCim { variable: 0, parents: vec![], cims: vec![c.clone()] }]).unwrap();
        assert_eq!(q, dense(&c));
        let two = amalgamate(
            &[2],
            &[
                ConditionalCim { variable: 0, parents: vec![], cims: vec![cim(1.0, 0.0)] },
                ConditionalCim { variable: 0, parents: vec![], cims: vec![cim(0.1, 0.0)] },
            ],
        )
        .unwrap();
        assert_eq!(two[0][1], 1.0 + 0.1);
    }

    #[test]
    fn rejects_inconsistent_input() {
        assert!(Cim::parse("-1,2;0,0").is_err());
        assert!(Cim::parse("1,-1;0,0").is_err());
        assert!(Cim::parse("-1,1").is_err());
        let c = cim(1.0, 1.0);
        assert!(amalgamate(&[3], &[ConditionalCim { variable: 0, parents: vec![], cims: vec![c.clone()] }]).is_err());
        assert!(amalgamate(&[2, 2], &[ConditionalCim { variable: 0, parents: vec![1], cims: vec![c.clone()] }]).is_err());
        assert!(amalgamate(&[2], &[ConditionalCim { variable: 1, parents: vec![], cims: vec![c] }]).is_err());
        assert_eq!(Cim::parse("-0.9,0.9;0.0,0.0").unwrap().to_string(), "-0.9,0.9;0.0,0.0");
    }
}

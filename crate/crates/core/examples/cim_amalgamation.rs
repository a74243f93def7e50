//! Combine per-clause conditional intensity matrices into one joint matrix.

use relboost::rctbn::{amalgamate, Cim, ConditionalCim};

fn main() {
    let cim = |a: f64, b: f64| Cim::new(vec![vec![-a, a], vec![b, -b]]).unwrap();
    // 0 = cvd(x), 1 = hyp(y), 2 = bmi(x); every variable binary.
    let clauses = vec![
        ConditionalCim { variable: 0, parents: vec![1], cims: vec![cim(0.2, 0.05), cim(1.3, 0.15)] },
        ConditionalCim { variable: 0, parents: vec![2], cims: vec![cim(0.4, 0.07), cim(0.9, 0.11)] },
        ConditionalCim { variable: 1, parents: vec![], cims: vec![cim(0.3, 0.6)] },
        ConditionalCim { variable: 2, parents: vec![], cims: vec![cim(0.25, 0.35)] },
    ];
    let q = amalgamate(&[2, 2, 2], &clauses).unwrap();
    let label = |s: usize| format!("{}{}{}", s & 1, (s >> 1) & 1, (s >> 2) & 1);
    print!("      ");
    (0..8).for_each(|j| print!("{:>7}", label(j)));
    println!();
    for (i, row) in q.iter().enumerate() {
        print!("{:>6}", label(i));
        row.iter().for_each(|v| print!("{v:>7.2}"));
        println!("   sum {:+.1e}", row.iter().sum::<f64>());
    }
}

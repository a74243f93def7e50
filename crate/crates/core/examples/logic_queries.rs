//! Parse a schema and facts, then run a few conjunctive queries.

use std::sync::Arc;

use relboost::logic::{parse_facts, parse_literal_list, match_body, satisfies, Substitution};
use relboost::Schema;

fn main() {
    let schema = Arc::new(
        Schema::parse("pred: parent/2.\npred: smokes/1.\npred: age/1 continuous.").unwrap(),
    );
    let db = parse_facts(
        "parent(ann,bob).\nparent(ann,cid).\nparent(bob,dee).\nsmokes(bob).\nage(ann)=71.0.\nage(bob)=45.5.\n",
        schema.clone(),
    )
    .unwrap();
    println!("{} facts", db.len());
    print!("{}", db.serialize());

    let grandparent = parse_literal_list("parent(X,Y), parent(Y,Z)", &schema).unwrap();
    for s in match_body(&grandparent, &Substitution::new(), &db).unwrap() {
        println!("grandparent: {} of {}", s.get("X").unwrap(), s.get("Z").unwrap());
    }

    let smoking_child = parse_literal_list("parent(X,Y), smokes(Y)", &schema).unwrap();
    for who in ["ann", "bob"] {
        let seed = Substitution::from_pairs([("X", who)]);
        println!("{who} has a smoking child: {}", satisfies(&smoking_child, &seed, &db).unwrap());
    }

    let non_smoking_child = parse_literal_list("parent(X,Y), \\+ smokes(Y)", &schema).unwrap();
    for s in match_body(&non_smoking_child, &Substitution::new(), &db).unwrap() {
        println!("non-smoking child: {} of {}", s.get("Y").unwrap(), s.get("X").unwrap());
    }
}

//! Inspect the shipped quantile bucket schemes and build a fresh one from a
//! sample of day deltas. Buckets discretize "days between two dates" so the
//! model can embed them; document-level schemes carry three extra special
//! buckets for missing-date cases.

use chronofact::seed;
use chronofact::timeline::{
    build_bucket_scheme, shipped_content_scheme, shipped_document_scheme, SchemeLevel,
};
use rand::Rng;

fn main() -> chronofact::Result<()> {
    let doc = shipped_document_scheme();
    let con = shipped_content_scheme();
    println!(
        "shipped document scheme: {} buckets ({} intervals + specials)",
        doc.num_buckets(),
        doc.intervals().len()
    );
    println!(
        "shipped content scheme:  {} buckets ({} intervals, no specials)",
        con.num_buckets(),
        con.intervals().len()
    );
    println!();

    println!("where a few deltas land in the document scheme:");
    for delta in [-3650i64, -30, -1, 0, 1, 30, 3650] {
        let idx = doc.assign_bucket(Some(delta))?;
        println!("  delta {delta:>6} days -> bucket {idx:>2}");
    }
    println!(
        "  missing date        -> bucket {:>2} (evidence_no_date)",
        doc.assign_bucket(None)?
    );
    println!();

    // Build a scheme from scratch. The sample mimics a realistic corpus:
    // most evidence clusters near the claim date, a tail reaches years out.
    let mut rng = seed::rng(7, "example/deltas");
    let deltas: Vec<i64> = (0..5000)
        .map(|_| {
            let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
            let magnitude = (rng.gen_range(0.0f64..1.0).powi(3) * 2000.0) as i64;
            sign * magnitude
        })
        .collect();

    let scheme = build_bucket_scheme(&deltas, 10, SchemeLevel::Content)?;
    println!("10-quantile scheme built from {} sampled deltas:", deltas.len());
    print!("{}", scheme.to_text());
    println!();
    println!(
        "equal-probability bins are narrow near zero and wide in the tails, \
         matching the sample's density"
    );
    Ok(())
}

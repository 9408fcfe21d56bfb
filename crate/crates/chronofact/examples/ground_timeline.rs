//! Ground a claim and its evidence on the shared bucket timeline, at both
//! granularities: document level buckets publication-date deltas, content
//! level buckets every in-text time expression against the claim date.

use chronofact::timeline::{
    ground_content_level, ground_document_level, shipped_content_scheme,
    shipped_document_scheme,
};
use chronofact::CalendarDate;

fn d(s: &str) -> CalendarDate {
    s.parse().expect("valid date literal")
}

fn main() -> chronofact::Result<()> {
    let doc_scheme = shipped_document_scheme();
    let con_scheme = shipped_content_scheme();

    let claim_pub = Some(d("2018-05-28"));
    let evidence_pubs = [Some(d("2018-05-27")), Some(d("2017-11-02")), None];

    println!("claim published {}, three evidence docs:", d("2018-05-28"));
    let (claim_rep, ev_reps) = ground_document_level(claim_pub, &evidence_pubs, doc_scheme);
    println!("  claim rep: bucket {} (claim_date_available)", claim_rep.indices[0]);
    for (pub_date, rep) in evidence_pubs.iter().zip(&ev_reps) {
        match pub_date {
            Some(p) => println!("  evidence published {p}: bucket {}", rep.indices[0]),
            None => println!("  evidence undated:          bucket {} (evidence_no_date)", rep.indices[0]),
        }
    }
    println!();

    // Content level: one bucket per normalized expression, in reading order.
    let claim_exprs = [d("2018-05-29")];
    let evidence_exprs = vec![
        vec![d("2018-05-29"), d("2018-05-25")],
        vec![d("2017-11-01")],
        vec![],
    ];
    let (claim_rep, ev_reps) =
        ground_content_level(claim_pub, &claim_exprs, &evidence_exprs, con_scheme);
    println!("content-level grounding against the claim date:");
    println!("  claim expressions -> buckets {:?}", claim_rep.indices);
    for (i, rep) in ev_reps.iter().enumerate() {
        println!("  evidence {i} expressions -> buckets {:?}", rep.indices);
    }
    println!();

    // Without a claim date, content deltas are undefined: all reps are
    // empty, and the document level marks the claim as claim_no_date while
    // every evidence doc degrades to evidence_no_date.
    let (claim_rep, ev_reps) = ground_document_level(None, &evidence_pubs, doc_scheme);
    println!("same instance with the claim date removed:");
    println!("  claim rep: bucket {} (claim_no_date)", claim_rep.indices[0]);
    for rep in &ev_reps {
        println!("  evidence rep: bucket {} (evidence_no_date)", rep.indices[0]);
    }
    let (claim_rep, ev_reps) =
        ground_content_level(None, &claim_exprs, &evidence_exprs, con_scheme);
    println!(
        "  content reps: claim {:?}, evidence {:?} (all empty)",
        claim_rep.indices,
        ev_reps.iter().map(|r| r.indices.len()).collect::<Vec<_>>()
    );
    Ok(())
}

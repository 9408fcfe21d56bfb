//! Run the rule-based temporal tagger over a few raw documents and show
//! what it extracts: publication dates, normalized time expressions, and
//! the token annotations that mark expressions and their nearest predicate.

use chronofact::tagger::{tag_document, tokenize, TokenType};
use chronofact::CalendarDate;

fn main() -> chronofact::Result<()> {
    let docs = [
        (
            "storm-report",
            "Jun 2, 2017 ... Subtropical Storm Alberto is expected to make \
             landfall tomorrow. Officials closed beaches last Friday and \
             will reassess in two weeks.",
        ),
        (
            "press-release",
            "Published: 2019-03-12. The council approved the budget \
             yesterday and the new rates take effect April 2019.",
        ),
        (
            "undated-note",
            "Witnesses said the fire started on Halloween and burned \
             until November 3, 2021.",
        ),
    ];

    for (doc_id, text) in docs {
        let record = tag_document(doc_id, text, None);
        println!("== {doc_id}");
        match record.publication_date {
            Some(d) => println!("publication date: {d}"),
            None => println!("publication date: none found"),
        }
        for expr in &record.expressions {
            println!(
                "  [{:>8}] {:<22} -> {}",
                format!("{:?}", expr.kind).to_lowercase(),
                expr.surface,
                expr.normalized
            );
        }
        println!();
    }

    // The fallback anchor stands in for a missing publication date, so
    // relative expressions still resolve. Here the claim date plays anchor.
    let claim_date: CalendarDate = "2021-10-30".parse()?;
    let record = tag_document(
        "undated-note",
        "Witnesses said the fire started on Halloween and burned until \
         November 3, 2021.",
        Some(claim_date),
    );
    println!("== undated-note, anchored to claim date {claim_date}");
    for expr in &record.expressions {
        println!("  {:<22} -> {}", expr.surface, expr.normalized);
    }
    println!();

    // Token annotations: TIME spans plus the nearest verb-like predicate.
    let text = "Subtropical Storm Alberto is expected to make landfall tomorrow.";
    let anchor: CalendarDate = "2017-06-02".parse()?;
    let record = tag_document("annotated", text, Some(anchor));
    println!("== token annotations for: {text}");
    for (token, ann) in tokenize(text).iter().zip(&record.annotations) {
        if ann.token_type == TokenType::Other {
            continue;
        }
        let extra = match (ann.pred_offset, ann.expr_index) {
            (Some(off), _) => format!(" (offset {off:+} to its expression)"),
            (_, Some(idx)) => format!(" (expression #{idx})"),
            _ => String::new(),
        };
        println!("  {:<10} {:?}{extra}", token, ann.token_type);
    }
    Ok(())
}

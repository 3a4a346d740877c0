//! Replays a score track through temporal suppression and prints the
//! emitted window positions, with and without the final flush.

use signvox::nms::{simulate_scores, NmsParams};

fn main() -> signvox::Result<()> {
    // Three bursts of activity; the last one is still pending at the end.
    let mut scores = vec![0.2f32; 120];
    for (centre, peak) in [(15usize, 0.92f32), (55, 0.81), (110, 0.88)] {
        for d in 0..6 {
            let v = peak - 0.03 * d as f32;
            scores[centre + d] = v;
            scores[centre - d] = v;
        }
    }
    let params = NmsParams { window: 16, hop: 2, overlap: 8, threshold: 0.7 };
    for flush in [false, true] {
        let em = simulate_scores(&scores, params, flush)?;
        println!("flush {flush}:");
        for e in em {
            println!("  position {:>3}  score {:.2}{}", e.position, scores[e.position - 1], if e.flushed { "  (flushed)" } else { "" });
        }
    }
    Ok(())
}

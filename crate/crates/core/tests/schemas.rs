use ergolab_core::structure::write_scrambled_csv;
use ergolab_core::*;

fn keys(v: &serde_json::Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

#[test]
fn report_json_fields() {
    let s = System::tent();
    let m = sample_measure(&Sampler::Lebesgue, &s, 2_000, 1).unwrap();
    let mut p = ExpansivityParams::new(0.1);
    p.centers = 5;
    let r = expansivity_report(&s, &m, &p).unwrap();
    let v = serde_json::to_value(r.summary()).unwrap();
    assert_eq!(
        keys(&v),
        [
            "centers",
            "decay_rate_median",
            "delta",
            "n_max",
            "seed",
            "threshold",
            "verdict",
            "x_delta_fraction"
        ]
    );
    let mut buf = Vec::new();
    r.write_curves_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf)
        .unwrap()
        .starts_with("center,delta,n,mass,std_err\n"));
}

#[test]
fn entropy_and_wandering_json_fields() {
    let e = topological_entropy_estimate(&System::tent(), &[0.2], (1, 3), 1_000).unwrap();
    let v = serde_json::to_value(e.summary()).unwrap();
    assert_eq!(keys(&v), ["h_top_estimate", "slope_per_epsilon"]);
    let w = wandering_interval_verdict(&System::tent(), (0.4, 0.6), 10).unwrap();
    let v = serde_json::to_value(w.summary()).unwrap();
    assert_eq!(
        keys(&v),
        ["first_collision", "horizon", "interval", "verdict"]
    );
    assert_eq!(v["verdict"], "not-wandering");
}

#[test]
fn scrambled_csv_header() {
    let st = scrambled_pair_stats(&System::tent(), 0.1, 0.2, 50, 0).unwrap();
    let mut buf = Vec::new();
    write_scrambled_csv(&mut buf, &[st]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("x,y,liminf,limsup,horizon\n"), "{text}");
    assert_eq!(text.lines().count(), 2);
}

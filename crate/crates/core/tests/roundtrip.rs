use voluma::distributions::DistributionModel;
use voluma::gof::{FitReport, SelectionOptions};
use voluma::ingest::{load_trace, read_volume_tsv, write_volume_tsv, PcapReadOptions};
use voluma::synthgen::{gen_volumes, write_pcap, SynthSpec};
use voluma::trace::Trace;

fn spec(seed: u64) -> SynthSpec {
    SynthSpec {
        integer: true,
        label: format!("rt-{seed}"),
        ..SynthSpec::new(
            DistributionModel::log_normal(9.0, 0.6).unwrap(),
            600,
            0.1,
            seed,
        )
    }
}

#[test]
fn pcap_round_trip_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let vs = gen_volumes(&spec(seed)).unwrap().series;
        let path = tmp.path().join(format!("rt-{seed}.pcap"));
        write_pcap(&vs, &path, 1500).unwrap();
        let back = load_trace(&path, &PcapReadOptions::default())
            .unwrap()
            .at_timescale(0.1)
            .unwrap();
        assert_eq!(back.volumes, vs.volumes, "seed {seed}");
        // coarser timescales agree with rebinned volumes as well
        let coarse = Trace::Volumes(vs.clone()).at_timescale(1.0).unwrap();
        let coarse_back = load_trace(&path, &PcapReadOptions::default())
            .unwrap()
            .at_timescale(1.0)
            .unwrap();
        assert_eq!(coarse_back.volumes, coarse.volumes);
    }
}

#[test]
fn tsv_and_pcap_give_the_same_report() {
    let tmp = tempfile::tempdir().unwrap();
    let vs = gen_volumes(&spec(11)).unwrap().series;
    let tsv = tmp.path().join("a.tsv");
    let pcap = tmp.path().join("a.pcap");
    write_volume_tsv(&vs, &tsv).unwrap();
    write_pcap(&vs, &pcap, 1500).unwrap();
    assert_eq!(read_volume_tsv(&tsv).unwrap().volumes, vs.volumes);

    let opts = SelectionOptions {
        bootstrap_reps: 40,
        ..SelectionOptions::default()
    };
    let report = |p: &std::path::Path| -> FitReport {
        let t = load_trace(p, &PcapReadOptions::default()).unwrap();
        let mut r = FitReport::for_series(&t.at_timescale(0.1).unwrap(), &opts).unwrap();
        r.source.clear();
        r
    };
    let a = report(&tsv);
    let b = report(&pcap);
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

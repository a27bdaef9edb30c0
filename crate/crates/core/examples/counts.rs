use scanlab::linking::*;
use scanlab::scan::enumerate_commands;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let base = enumerate_commands();
    eprintln!("enumerate: {:.2}s", t0.elapsed().as_secs_f32());
    let inv = scan_inventory(4, 10);
    let t = Instant::now();
    let pool = build_replacement_test(&base, &inv);
    eprintln!("pool {} in {:.2}s", pool.len(), t.elapsed().as_secs_f32());
    drop(pool);
    let t = Instant::now();
    let b = build_inductive(&base, &inv, Level::Standard).unwrap();
    eprintln!("il std {} in {:.2}s", b.train.len(), t.elapsed().as_secs_f32());
    let t = Instant::now();
    let p = one_shot_pool(&base, &inv);
    eprintln!("one-shot pool {} in {:.2}s", p.len(), t.elapsed().as_secs_f32());
    let t = Instant::now();
    let (tr, _te) = split_pool(&p, 0.8, 42);
    let tr = remove_multi_variant(&tr, &inv);
    eprintln!("split+remove {} in {:.2}s", tr.len(), t.elapsed().as_secs_f32());
    let t = Instant::now();
    let k1 = subsample_per_variant(&tr, &inv, 1, 42).unwrap();
    eprintln!("k=1 {} in {:.2}s", k1.len(), t.elapsed().as_secs_f32());
}

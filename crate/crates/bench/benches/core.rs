use criterion::{criterion_group, criterion_main};

criterion_group!(
    benches,
    listlab_bench::enumeration,
    listlab_bench::enclosing_ball,
    listlab_bench::list_size,
    listlab_bench::rogers
);
criterion_main!(benches);

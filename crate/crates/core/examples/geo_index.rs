//! Great-circle distances and radius queries over a grid index.
//!
//! ```text
//! cargo run --example geo_index
//! ```

use bikeroute::geo::{build_index, haversine, point_to_segment_distance, GeoPoint, Polyline};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let union_sq = GeoPoint::new(40.7359, -73.9911)?;
    let washington_sq = GeoPoint::new(40.7308, -73.9973)?;
    println!("Union Sq -> Washington Sq: {:.1} m", haversine(union_sq, washington_sq));

    let broadway = Polyline::new(vec![
        GeoPoint::new(40.7295, -73.9965)?,
        GeoPoint::new(40.7336, -73.9910)?,
        GeoPoint::new(40.7359, -73.9905)?,
    ])?;
    println!("Broadway stretch: {:.1} m", broadway.length());
    let (a, b) = broadway.segments().next().unwrap();
    println!("Washington Sq to first segment: {:.1} m", point_to_segment_distance(washington_sq, a, b));

    // A few hundred synthetic points on a lattice, indexed once.
    let points: Vec<(GeoPoint, usize)> = (0..400)
        .map(|i| {
            let p = GeoPoint::new(40.72 + (i / 20) as f64 * 0.001, -74.00 + (i % 20) as f64 * 0.0012).unwrap();
            (p, i)
        })
        .collect();
    let index = build_index(points);
    for r in [100.0, 250.0, 500.0] {
        let mut hits = index.query_radius_with_distance(union_sq, r);
        hits.sort_by(|a, b| a.1.total_cmp(&b.1));
        let nearest = hits.first().map(|(id, d)| format!("nearest #{id} at {d:.0} m")).unwrap_or_default();
        println!("within {r:>5} m of Union Sq: {:>3} points  {nearest}", hits.len());
    }
    Ok(())
}

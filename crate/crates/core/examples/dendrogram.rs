//! Single and complete linkage on a handful of orders, cut by distance and
//! by cluster count.
//!
//!     cargo run --example dendrogram

use recagglo::agglo::{cut_distance, cut_maxclust, linkage, Linkage};
use recagglo::distance::distance_matrix;
use recagglo::schema::read_csv;
use recagglo::{AttributeSchema, HammingMetric};

const SCHEMA: &str = "\
customer_email=customer
ship_street=shipping
ship_zip=shipping
card_bin=payment
bill_street=billing
";

const ORDERS: &str = "\
record_id,timestamp,label,customer_email,ship_street,ship_zip,card_bin,bill_street
a,1,F,x@mail,Main St 1,1000,4111,Main St 1
b,2,F,y@mail,Main St 1,1000,4111,Main St 1
c,3,F,z@mail,Main St 1,1000,5500,Oak Ave 3
d,4,L,anna@mail,Elm Rd 7,2000,3700,Elm Rd 7
e,5,L,anna@mail,Elm Rd 7,2000,3700,
f,6,L,bob@mail,Pine Ln 2,3000,6011,Pine Ln 2
";

fn main() -> recagglo::Result<()> {
    let schema = AttributeSchema::parse(SCHEMA)?;
    let data = read_csv(ORDERS.as_bytes(), schema, "")?;
    let metric = HammingMetric::unit(data.schema().d());
    let all: Vec<usize> = (0..data.n()).collect();
    let d = distance_matrix(&all, &all, &data, &metric)?;

    for method in [Linkage::Single, Linkage::Complete] {
        let lm = linkage(&d, method)?;
        println!("{} linkage", method.as_str());
        for m in lm.merges() {
            println!(
                "  {:>2} + {:>2} at {:.2} (size {})",
                m.left, m.right, m.distance, m.size
            );
        }
        let ids = |cl: recagglo::Clustering| -> Vec<Vec<&str>> {
            cl.iter()
                .map(|c| {
                    c.members
                        .iter()
                        .map(|&i| data.record(i).record_id.as_str())
                        .collect()
                })
                .collect()
        };
        println!("  cut at 0.5:  {:?}", ids(cut_distance(&lm, 0.5)));
        println!("  two clusters: {:?}", ids(cut_maxclust(&lm, 2)));
    }
    Ok(())
}

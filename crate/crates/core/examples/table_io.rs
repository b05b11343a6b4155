//! Reads and writes tables with identifiers and missing cells.

use mmblock::table_io;

fn main() -> mmblock::Result<()> {
    let text = "# mmblock-table v1 kind=gaussian\nid,m1,m2,m3\ng1,0.5,NA,-1.2\ng2,,0.3,0.8\n";
    let t = table_io::parse_table(text, None)?;
    println!("{} x {}, {} observed", t.table.n1(), t.table.n2(), t.table.observed_count());
    println!("rows {:?}, columns {:?}", t.row_ids.as_deref().unwrap_or_default(), t.col_ids.as_deref().unwrap_or_default());

    let dir = std::env::temp_dir().join("mmblock-table-io-example");
    let path = dir.join("table.csv");
    table_io::write_table(&path, &t)?;
    let back = table_io::read_table(&path, None)?;
    println!("round trip preserves the mask: {}", back.table.mask() == t.table.mask());
    print!("{}", table_io::format_table(&back));
    Ok(())
}

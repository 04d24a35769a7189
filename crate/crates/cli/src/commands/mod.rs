pub mod evaluate;
pub mod pairs;
pub mod report;
pub mod simulate;
pub mod track;

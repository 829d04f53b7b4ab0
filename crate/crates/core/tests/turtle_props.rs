//! Turtle round-trip properties, cross-checked against a separate reader.

mod support;

use knowhow_core::rdf::{ns, parse_turtle, serialize_turtle, BlankNode, Graph, Iri, Literal, Term, Triple};
use proptest::prelude::*;
use support::turtle_reader;

fn namespace() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        ns::EX,
        ns::PROHOW,
        ns::PROEX,
        ns::RDFS,
        ns::RDF,
        "http://other.example.org/kb/",
        "urn:isbn:",
        "http://example.ex/path#frag",
    ])
}

fn iri() -> impl Strategy<Value = Iri> {
    (namespace(), "[A-Za-z0-9_.~%-]{0,8}|[a-zé\u{4e2d}]{1,4}")
        .prop_map(|(ns, local)| Iri::new(format!("{ns}{local}")).unwrap())
}

fn literal() -> impl Strategy<Value = Literal> {
    let lexical = prop_oneof![
        "\\PC{0,12}",
        "[a-z \"\\\\\n\r\t']{0,10}",
        prop::collection::vec(prop::char::range('\u{0}', '\u{1f}'), 0..4).prop_map(|cs| cs.into_iter().collect()),
    ];
    let datatype = prop::sample::select(vec![
        "http://www.w3.org/2001/XMLSchema#integer",
        "http://www.w3.org/2001/XMLSchema#nonNegativeInteger",
        "http://www.w3.org/2001/XMLSchema#date",
        "http://other.example.org/dt",
    ]);
    prop_oneof![
        lexical.clone().prop_map(Literal::simple),
        (lexical.clone(), "[a-z]{2,3}(-[A-Z]{2})?")
            .prop_map(|(l, lang)| Literal::with_language(l, lang).unwrap()),
        (lexical, datatype).prop_map(|(l, dt)| Literal::typed(l, Iri::new(dt).unwrap())),
    ]
}

fn subject(blank: bool) -> BoxedStrategy<Term> {
    if blank {
        prop_oneof![
            3 => iri().prop_map(Term::Iri),
            1 => "[A-Za-z0-9_]{1,5}".prop_map(|l| Term::BlankNode(BlankNode::new(l).unwrap())),
        ]
        .boxed()
    } else {
        iri().prop_map(Term::Iri).boxed()
    }
}

fn object(blank: bool) -> BoxedStrategy<Term> {
    prop_oneof![
        2 => subject(blank),
        2 => literal().prop_map(Term::Literal),
    ]
    .boxed()
}

fn predicate() -> impl Strategy<Value = Iri> {
    prop_oneof![
        iri(),
        Just(Iri::new(format!("{}type", ns::RDF)).unwrap()),
        Just(Iri::new(format!("{}has_step", ns::PROHOW)).unwrap()),
    ]
}

fn graph(blank: bool, max: usize) -> impl Strategy<Value = Graph> {
    prop::collection::vec((subject(blank), predicate(), object(blank)), 0..max).prop_map(|ts| {
        ts.into_iter()
            .map(|(s, p, o)| Triple::with_predicate(s, p, o).unwrap())
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn serialize_then_parse_is_identity(g in graph(true, 40)) {
        let text = serialize_turtle(&g);
        let back = parse_turtle(&text, None).unwrap();
        prop_assert_eq!(&back, &g, "{}", text);
    }

    #[test]
    fn separate_reader_sees_the_same_triples(g in graph(true, 40)) {
        let text = serialize_turtle(&g);
        let read = turtle_reader::read(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(read, turtle_reader::statements(&g));
    }

    #[test]
    fn serialization_is_deterministic(ts in prop::collection::vec((subject(true), predicate(), object(true)), 0..30)) {
        let forward: Graph = ts.iter().cloned().map(|(s, p, o)| Triple::with_predicate(s, p, o).unwrap()).collect();
        let backward: Graph = ts.into_iter().rev().map(|(s, p, o)| Triple::with_predicate(s, p, o).unwrap()).collect();
        prop_assert_eq!(serialize_turtle(&forward), serialize_turtle(&backward));
    }

    #[test]
    fn insertion_is_idempotent(g in graph(true, 20), extra in (subject(true), predicate(), object(true))) {
        let t = Triple::with_predicate(extra.0, extra.1, extra.2).unwrap();
        let mut once = g.clone();
        once.insert(t.clone());
        let mut twice = once.clone();
        prop_assert!(!twice.insert(t));
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.len(), twice.len());
        prop_assert_eq!(serialize_turtle(&once), serialize_turtle(&twice));
    }

    #[test]
    fn lookups_agree_with_a_scan(g in graph(true, 40), probe in (subject(true), predicate(), object(true))) {
        let all: Vec<Triple> = g.iter().collect();
        let (s, p, o) = probe;
        for mask in 0..8u8 {
            let qs = (mask & 1 != 0).then_some(&s);
            let qp = (mask & 2 != 0).then_some(&p);
            let qo = (mask & 4 != 0).then_some(&o);
            let mut got = g.matching(qs, qp, qo);
            got.sort();
            let mut want: Vec<Triple> = all
                .iter()
                .filter(|t| qs.is_none_or(|x| t.subject() == x)
                    && qp.is_none_or(|x| t.predicate() == x)
                    && qo.is_none_or(|x| t.object() == x))
                .cloned()
                .collect();
            want.sort();
            prop_assert_eq!(got, want);
        }
    }
}

#[test]
fn separate_reader_agrees_on_hand_written_input() {
    let text = "@prefix ex: <http://example.ex/> .\n\
                ex:a <http://vocab.inf.ed.ac.uk/prohow#has_step> ex:b , _:x ;\n\
                     <http://www.w3.org/2000/01/rdf-schema#label> \"A \\\"quoted\\\" label\\u00e9\"@en ;\n\
                     a ex:Task ;\n\
                     ex:n \"3\"^^<http://www.w3.org/2001/XMLSchema#integer> .";
    let graph = parse_turtle(text, None).unwrap();
    assert_eq!(graph.len(), 5);
    assert_eq!(turtle_reader::read(text).unwrap(), turtle_reader::statements(&graph));
}

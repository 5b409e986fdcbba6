import random
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import generate_set
from docel.errors import (
    ConflictingClassification,
    DuplicateAttribute,
    DuplicateTraceId,
    EmptyList,
    HeterogeneousList,
    InvalidMapping,
    InvalidValue,
    MissingActivity,
    MissingTimestamp,
    MissingTraceId,
    UnmappedLog,
    UnsupportedNesting,
    XesError,
    XmlSyntax,
)
from docel.model import AttributeValue
from docel.xes import (
    AttributeTag,
    MappingConfig,
    classify_attributes,
    count_attribute_values,
    default_log_id,
    parse_xes,
)

UTC = timezone.utc


def xes(body: str) -> bytes:
    return f'<?xml version="1.0"?><log xmlns="http://www.xes-standard.org/">{body}</log>'.encode()


def event(activity="a", ts="2020-01-01T00:00:00Z", extra=""):
    return (
        f'<event><string key="concept:name" value="{activity}"/>'
        f'<date key="time:timestamp" value="{ts}"/>{extra}</event>'
    )


def trace(tid, body):
    return f'<trace><string key="concept:name" value="{tid}"/>{body}</trace>'


def test_minimal_log():
    log = parse_xes(xes(trace("o1", event("place order"))), "order")
    assert log.log_id == "order"
    assert len(log.traces) == 1
    (t,) = log.traces
    assert t.trace_id == "o1" and t.trace_attributes == {}
    (e,) = t.events
    assert e.activity == "place order"
    assert e.timestamp == datetime(2020, 1, 1, tzinfo=UTC)
    assert e.attributes == {}
    assert e.provisional_id == "order/0000"


def test_order_log_has_no_trace_attributes(running_inputs):
    order = parse_xes(running_inputs[0][0], "order")
    (o1,) = order.traces
    assert o1.trace_attributes == {}
    names = set().union(*(e.attributes for e in o1.events))
    assert names == {"Resource", "Quantity", "Value", "Refund", "Shipping method"}
    assert o1.events[0].attributes["Quantity"] == AttributeValue((2, 1, 3))


def test_customer_trace_attributes(running_inputs):
    customer = parse_xes(running_inputs[2][0], "customer")
    (c1,) = customer.traces
    assert set(c1.trace_attributes) == {"customer name", "bank account"}


def test_scalar_kinds_and_namespaced_keys():
    body = (
        '<string key="org:resource" value="Anna"/><int key="n" value="-3"/><float key="f" value="1.5"/>'
        '<boolean key="b" value="TRUE"/><date key="d" value="2020-01-01T01:00:00+01:00"/><id key="i" value="x-1"/>'
    )
    (e,) = parse_xes(xes(trace("t", event(extra=body))), "l").traces[0].events
    assert e.attributes == {
        "org:resource": AttributeValue.of("Anna"),
        "n": AttributeValue.of(-3),
        "f": AttributeValue.of(1.5),
        "b": AttributeValue.of(True),
        "d": AttributeValue.of(datetime(2020, 1, 1, tzinfo=UTC)),
        "i": AttributeValue.of("x-1"),
    }


def test_list_with_and_without_values_wrapper():
    wrapped = '<list key="q"><values><int key="1" value="1"/><int key="2" value="2"/></values></list>'
    bare = '<list key="r"><string key="a" value="x"/><string key="b" value="y"/></list>'
    (e,) = parse_xes(xes(trace("t", event(extra=wrapped + bare))), "l").traces[0].events
    assert e.attributes["q"] == AttributeValue((1, 2))
    assert e.attributes["r"] == AttributeValue(("x", "y"))


def test_events_resorted_within_trace_stably():
    body = event("late", "2020-01-02T00:00:00Z") + event("early", "2020-01-01T00:00:00Z") + event("tie", "2020-01-02T00:00:00Z")
    (t,) = parse_xes(xes(trace("t", body)), "l").traces
    assert [e.activity for e in t.events] == ["early", "late", "tie"]
    assert [e.provisional_id for e in t.events] == ["l/0000", "l/0001", "l/0002"]


def test_log_level_attributes_and_declarations_ignored():
    doc = xes(
        '<extension name="Concept" prefix="concept" uri="x"/><global scope="event"><string key="concept:name" value="?"/></global>'
        '<classifier name="c" keys="concept:name"/><string key="concept:name" value="whole log"/>' + trace("t", event())
    )
    log = parse_xes(doc, "l")
    assert len(log.traces) == 1 and log.traces[0].trace_attributes == {}


@pytest.mark.parametrize(
    "doc, error",
    [
        (b"<log><trace>", XmlSyntax),
        (b"<notlog/>", XmlSyntax),
        (xes(trace("t", '<event><string key="concept:name" value="a"/></event>')), MissingTimestamp),
        (xes(trace("t", '<event><date key="time:timestamp" value="2020-01-01"/></event>')), MissingActivity),
        (xes("<trace>" + event() + "</trace>"), MissingTraceId),
        (xes(trace("t", "") + trace("t", "")), DuplicateTraceId),
        (xes(trace("t", event(extra='<container key="c"><int key="x" value="1"/></container>'))), UnsupportedNesting),
        (xes(trace("t", event(extra='<list key="c"><list key="x"><int key="y" value="1"/></list></list>'))), UnsupportedNesting),
        (xes(trace("t", event(extra='<string key="s" value="v"><int key="meta" value="1"/></string>'))), UnsupportedNesting),
        (xes(trace("t", event(extra='<list key="c"><int key="x" value="1"/><string key="y" value="a"/></list>'))), HeterogeneousList),
        (xes(trace("t", event(extra='<list key="c"></list>'))), EmptyList),
        (xes(trace("t", event(extra='<int key="n" value="one"/>'))), InvalidValue),
        (xes(trace("t", event(extra='<boolean key="b" value="yes"/>'))), InvalidValue),
        (xes(trace("t", event(ts="soon"))), InvalidValue),
        (xes(trace("t", event(extra='<int key="n" value="1"/><int key="n" value="2"/>'))), DuplicateAttribute),
    ],
)
def test_parse_errors_are_typed(doc, error):
    with pytest.raises(error):
        parse_xes(doc, "l")


def test_xml_syntax_error_reports_position():
    with pytest.raises(XmlSyntax) as info:
        parse_xes(b"<log>\n<trace>\n</log>", "l")
    assert info.value.position[0] == 3


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=200))
def test_parser_never_fails_untyped(data):
    try:
        parse_xes(data, "l")
    except XesError:
        pass


@pytest.mark.parametrize("seed", range(15))
def test_attribute_conservation_and_idempotence(seed):
    gen = generate_set(random.Random(seed), max_traces=20)
    for g in gen.logs:
        log = parse_xes(g.xml, g.log_id)
        assert count_attribute_values(log) == g.value_count
        assert sum(len(t.events) for t in log.traces) == g.event_count
        assert parse_xes(g.xml, g.log_id) == log


def test_default_log_id():
    assert default_log_id("/data/order.xes") == "order"
    assert default_log_id("product.XES") == "product"
    assert default_log_id("logs/customer.xes.gz") == "customer"


# --- mapping config and classification ---------------------------------------------


def test_mapping_config_rejects_overlap():
    with pytest.raises(ConflictingClassification):
        MappingConfig({"order": "Order"}, {"Refund"}, {"Refund": "Order"})


def test_mapping_config_rejects_two_logs_one_type():
    with pytest.raises(InvalidMapping):
        MappingConfig({"a": "Order", "b": "Order"})


def test_mapping_config_checks_coalesce_patterns():
    with pytest.raises(InvalidMapping):
        MappingConfig({"a": "A"}, coalesce={"^Q\\d+$": "Quantity"})


def tag_table(clog):
    return {name: (tag.kind, tag.owner) for name, tag in {**clog.trace_tags, **clog.event_tags}.items()}


def test_classification_of_running_example(running_inputs, running_cfg):
    order, product, customer = (parse_xes(doc, lid) for doc, lid in running_inputs)
    # hand-derived tag tables
    assert tag_table(classify_attributes(order, running_cfg)) == {
        "Resource": ("static_event", None),
        "Quantity": ("dynamic", "Order"),
        "Value": ("dynamic", "Order"),
        "Refund": ("dynamic", "Order"),
        "Shipping method": ("dynamic", "Order"),
    }
    assert tag_table(classify_attributes(product, running_cfg)) == {
        "product value": ("static_object", "Product"),
        "fragile": ("static_object", "Product"),
        "Resource": ("static_event", None),
    }
    assert tag_table(classify_attributes(customer, running_cfg)) == {
        "customer name": ("static_object", "Customer"),
        "bank account": ("static_object", "Customer"),
        "Resource": ("static_event", None),
    }


def test_unlisted_attribute_defaults_to_own_type(running_inputs):
    cfg = MappingConfig({"order": "Order", "product": "Product", "customer": "Customer"}, {"Resource"})
    clog = classify_attributes(parse_xes(running_inputs[0][0], "order"), cfg)
    assert clog.event_tags["Refund"] == AttributeTag("dynamic", "Order")


def test_foreign_owner_and_reference_tag(running_cfg):
    body = event("place order", extra='<list key="Quantity"><int key="a" value="1"/></list><string key="Order:id" value="o1"/>')
    customer = parse_xes(xes(trace("c1", body)), "customer")
    clog = classify_attributes(customer, running_cfg)
    assert clog.event_tags["Quantity"] == AttributeTag("dynamic", "Order")
    assert clog.event_tags["Order:id"] == AttributeTag("reference", "Order")


def test_classification_is_a_partition(running_inputs, running_cfg):
    for doc, lid in running_inputs:
        log = parse_xes(doc, lid)
        clog = classify_attributes(log, running_cfg)
        occurrences = list(clog.occurrences())
        assert len(occurrences) == count_attribute_values(log)
        assert all(tag.kind in {"static_event", "static_object", "dynamic", "reference"} for *_, tag in occurrences)


def test_classification_rejects_unknown_owner():
    cfg = MappingConfig({"order": "Order"}, (), {"Refund": "Invoice"})
    with pytest.raises(ConflictingClassification):
        classify_attributes(parse_xes(xes(trace("o1", event())), "order"), cfg)


def test_classification_rejects_unmapped_log():
    with pytest.raises(UnmappedLog):
        classify_attributes(parse_xes(xes(""), "nobody"), MappingConfig({"order": "Order"}))


def test_coalesce_sibling_columns_into_list():
    extra = '<int key="Q3" value="3"/><int key="Q1" value="1"/><int key="Q2" value="2"/><int key="Q10" value="10"/>'
    log = parse_xes(xes(trace("o1", event(extra=extra))), "order")
    cfg = MappingConfig({"order": "Order"}, coalesce={r"^Q(\d+)$": "Quantity"})
    clog = classify_attributes(log, cfg)
    (e,) = clog.log.traces[0].events
    assert dict(e.attributes) == {"Quantity": AttributeValue((1, 2, 3, 10))}
    assert clog.event_tags["Quantity"] == AttributeTag("dynamic", "Order")
    # off by default
    assert set(classify_attributes(log, MappingConfig({"order": "Order"})).log.traces[0].events[0].attributes) == {"Q1", "Q2", "Q3", "Q10"}


def test_coalesce_rejects_collisions_and_mixed_kinds():
    cfg = MappingConfig({"order": "Order"}, coalesce={r"^Q(\d+)$": "Quantity"})
    clash = parse_xes(xes(trace("o1", event(extra='<int key="Q1" value="1"/><int key="Quantity" value="2"/>'))), "order")
    with pytest.raises(ConflictingClassification):
        classify_attributes(clash, cfg)
    mixed = parse_xes(xes(trace("o1", event(extra='<int key="Q1" value="1"/><string key="Q2" value="x"/>'))), "order")
    with pytest.raises(HeterogeneousList):
        classify_attributes(mixed, cfg)

#!/usr/bin/env python3
"""Regenerates the CatWatch replay fixtures.

Writes fixtures/catwatch/replay.json plus the hallucination and omission
variants used by the tests.
"""
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent

HIGH = [
    ("Monitor Open Source Project Popularity",
     "The stakeholder aims to effortlessly monitor the popularity metrics of their open source projects across various GitHub accounts using CatWatch."),
    ("Identify Key Contributors and Collaborators",
     "The stakeholder seeks a feature that highlights the most active contributors and collaborators in their GitHub repositories through CatWatch."),
    ("Receive Timely Notifications on Project Activity",
     "The stakeholder desires a notification system within CatWatch that alerts them promptly about significant activities, such as new contributions or rising project trends."),
    ("Ensure Data Security and Privacy Compliance",
     "The stakeholder insists on CatWatch implementing robust data security measures and compliance with privacy standards to safeguard their GitHub account information."),
    ("Seamless Integration with Existing Workflow Tools",
     "The stakeholder requires CatWatch to seamlessly integrate with their existing workflow tools and development environments, enhancing productivity and user experience."),
    ("Access Comprehensive Analytics and Reports",
     "The stakeholder aims to access detailed analytics and reports generated by CatWatch, offering insights into project performance, community engagement, and other relevant metrics."),
]

LOW = [
    [("Check Popularity Now", "Quickly view how popular my open source projects are right now using CatWatch."),
     ("Explore Project Popularity Over Time", "Dive into historical trends and see how popular my open source projects have been using CatWatch.")],
    [("Identify and Connect with Top Contributors", "Find and connect with the most active contributors to my GitHub repositories through CatWatch."),
     ("Acknowledge Collaborators' Contributions", "Use CatWatch to highlight the impact and significance of collaborators' contributions, fostering a sense of community.")],
    [("Customize My Notification Preferences", "Personalize my notification settings in CatWatch to receive alerts tailored to specific project activities."),
     ("Get Instant Notifications on Key Events", "Receive real-time notifications in CatWatch about new contributions or significant trends in my GitHub repositories.")],
    [("Ensure My Data is Encrypted", "Trust CatWatch to implement robust data encryption methods, securing my GitHub account information from unauthorized access."),
     ("Control Who Accesses My Data", "Use access controls in CatWatch to manage and restrict access to my GitHub account information, ensuring only authorized personnel can interact with it.")],
    [("Easily Integrate CatWatch with My Workflow", "Benefit from CatWatch's robust integration framework to seamlessly connect the application with my existing workflow tools and development environments."),
     ("Follow Integration Documentation for a Smooth Process", "Refer to comprehensive integration documentation within CatWatch to guide me on effectively integrating the application with my established workflow.")],
    [("Explore Detailed Analytics Reports", "Utilize CatWatch to generate and explore detailed analytics reports, gaining insights into project performance, community engagement, and relevant metrics."),
     ("Customize Report Parameters", "Tailor analytics reports in CatWatch by customizing parameters, allowing me to focus on specific project performance and engagement metrics of interest.")],
]

KINDS = ["functional", "functional", "functional", "non_functional", "non_functional", "functional"]


def block(prose, payload):
    return prose + "\n\n```json\n" + json.dumps(payload, indent=2) + "\n```\n"


def get(path, **bindings):
    return {"verb": "GET", "path": path, "bindings": bindings}


ORG = {"organizations": {"actor_input": "GitHub organizations to cover"}}
RANGE = {"startDate": {"actor_input": "start of the period"}, "endDate": {"actor_input": "end of the period"}}

MAPPINGS = {
    "1.1": [get("/projects", **ORG), get("/statistics/projects", **ORG)],
    "1.2": [get("/projects", **ORG), get("/statistics/projects", **ORG, **RANGE)],
    "2.1": [get("/contributors", **ORG, sortBy={"literal": "-organizationalCommitsCount"})],
    "2.2": [get("/contributors", **ORG)],
    "3.2": [get("/config/scoring.project")],
    "6.1": [get("/statistics/projects", **ORG)],
    "6.2": [get("/statistics/projects", **ORG, **RANGE, sortBy={"actor_input": "metric of interest"})],
}
UNMAPPABLE = {"3.1": "Not applicable with current set of APIs"}
ORDER = ["1.1", "1.2", "2.1", "2.2", "3.1", "3.2", "6.1", "6.2"]


def mapping(ids, override=None):
    out = []
    for gid in ids:
        if override and gid in override:
            out.append({"goal_id": gid, "steps": override[gid]})
        elif gid in UNMAPPABLE:
            out.append({"goal_id": gid, "unmappable_reason": UNMAPPABLE[gid]})
        else:
            out.append({"goal_id": gid, "steps": MAPPINGS[gid]})
    return {"mappings": out}


def entry(stage, ordinal, content, **extra):
    e = {"stage": stage, "ordinal": ordinal}
    e.update(extra)
    e["content"] = content
    return e


def base_entries():
    entries = [entry("P1", 1, block(
        "Here are the high-level goals for the owner of a GitHub account using CatWatch.",
        {"goals": [{"name": n, "description": d} for n, d in HIGH]}))]
    entries.append(entry("CRITIQUE", 1, block(
        "Goals 4 and 5 describe qualities of the system rather than behaviour the actor triggers.",
        {"verdicts": [{"goal_id": str(i + 1), "kind": k} for i, k in enumerate(KINDS)]})))
    for i, subs in enumerate(LOW):
        entries.append(entry("P2", i + 1, block(
            f"Low-level goals for high-level goal {i + 1}, from the owner's point of view:",
            {"goals": [{"name": n, "description": d} for n, d in subs]})))
    return entries


def write(path, entries, comment):
    doc = {"comment": comment, "entries": entries}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def main():
    p4 = entry("P4", 1, block("Each goal below is aligned with the listed endpoints.", mapping(ORDER)),
               comment="3.2 keeps the /config/scoring.project alignment even though the endpoint only reads the scoring function")
    write(ROOT / "fixtures/catwatch/replay.json", base_entries() + [p4],
          "CatWatch replay: 6 high-level goals, 12 low-level goals, 7 alignments")

    bad = {"1.1": [get("/foo")]}
    halluc = [entry("P4", n, block("Mapping attempt.", mapping(ORDER, bad))) for n in (1, 2, 3)]
    write(ROOT / "tests/data/catwatch_hallucination.json", base_entries() + halluc,
          "every P4 answer aligns goal 1.1 with GET /foo, which the catalog does not have")

    omit = [entry("P4", 1, block("Partial mapping.", mapping([g for g in ORDER if not g.startswith("6.")]))),
            entry("P4", 2, block("Remaining goals.", mapping(["6.1", "6.2"])))]
    write(ROOT / "tests/data/catwatch_omission.json", base_entries() + omit,
          "the first P4 answer leaves out 6.1 and 6.2; the second round maps them")


if __name__ == "__main__":
    main()

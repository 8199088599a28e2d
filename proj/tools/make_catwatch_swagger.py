#!/usr/bin/env python3
"""Regenerates fixtures/catwatch/swagger.json (stdout)."""
import json
from collections import OrderedDict as O

def qp(name, desc, typ="string", required=False, **kw):
    d = O(name=name, **{"in": "query"}, description=desc, required=required, type=typ)
    d.update(kw)
    return d

org_ref = {"$ref": "#/parameters/organizations"}
def ok(schema_ref=None, array=False, desc="OK"):
    r = O(description=desc)
    if schema_ref:
        s = {"$ref": "#/definitions/" + schema_ref}
        r["schema"] = O(type="array", items=s) if array else s
    return O([("200", r), ("401", {"description": "Unauthorized"}), ("403", {"description": "Forbidden"}), ("404", {"description": "Not Found"})])

def op(tag, summary, op_id, params=None, resp=None, consumes=None):
    d = O(tags=[tag], summary=summary, operationId=op_id)
    if consumes: d["consumes"] = consumes
    d["produces"] = ["application/json"]
    d["parameters"] = params or []
    d["responses"] = resp or ok()
    return d

start_date = qp("startDate", "Start of the time range (ISO date)")
end_date = qp("endDate", "End of the time range (ISO date)")
offset = qp("offset", "Number of records to skip", "integer", format="int32")
limit = qp("limit", "Maximum number of records to return", "integer", format="int32")
sort = qp("sortBy", "Field to sort by; prefix with - for descending")
q = qp("q", "Free-text filter on names")
language = qp("language", "Programming language filter")

paths = O()
paths["/config"] = O(get=op("config-controller", "Show the active configuration", "getConfigUsingGET", [], ok("ConfigDto")))
paths["/config/scoring.project"] = O(
    get=op("config-controller", "Show the JavaScript scoring function for projects", "getScoringProjectUsingGET", [], ok("ScoringFunction")),
    post=op("config-controller", "Replace the JavaScript scoring function for projects", "setScoringProjectUsingPOST",
            [O(name="body", **{"in": "body"}, description="New scoring function", required=True, schema={"$ref": "#/definitions/ScoringFunction"})],
            ok("ScoringFunction"), consumes=["application/json"]))
paths["/contributors"] = O(get=op("contributors-controller", "List contributors of the organizations with their activity", "contributorsUsingGET",
                                  [org_ref, offset, limit, start_date, end_date, sort, q], ok("Contributor", array=True)))
paths["/contributors/corrections"] = O(get=op("contributors-controller", "List manual corrections applied to contributor data", "contributorsCorrectionsUsingGET",
                                              [org_ref, offset, limit], ok("ContributorCorrection", array=True)))
paths["/delete"] = O(get=op("database-controller", "Delete all collected statistics", "deleteUsingGET", [], ok()))
paths["/export"] = O(get=op("database-controller", "Export the collected statistics as JSON", "exportDataUsingGET", [], ok("ExportDto")))
paths["/import"] = O(post=op("database-controller", "Import statistics from a previous export", "importDataUsingPOST",
                             [O(name="body", **{"in": "body"}, description="Exported statistics", required=True, schema={"$ref": "#/definitions/ExportDto"})],
                             ok(), consumes=["application/json"]))
paths["/init"] = O(get=op("database-controller", "Fill the database with generated test data", "initUsingGET", [], ok()))
paths["/fetch"] = O(get=op("fetch-controller", "Fetch the latest data from GitHub for all organizations", "fetchDataUsingGET", [], ok()))
paths["/languages"] = O(get=op("languages-controller", "List programming languages used by the projects", "languagesUsingGET",
                               [org_ref, offset, limit, q], ok("Language", array=True)))
paths["/projects"] = O(get=op("projects-controller", "List projects of the organizations with their score", "projectsUsingGET",
                              [org_ref, offset, limit, start_date, end_date, sort, q, language], ok("Project", array=True)))
paths["/projects/{projectId}"] = O(get=op("projects-controller", "Show one project", "projectUsingGET",
                                          [O(name="projectId", **{"in": "path"}, description="Project identifier", required=True, type="integer", format="int64")],
                                          ok("Project")))
paths["/statistics"] = O(get=op("statistics-controller", "Organization-level statistics over time", "statisticsUsingGET",
                                [org_ref, start_date, end_date], ok("Statistics", array=True)))
paths["/statistics/contributors"] = O(get=op("statistics-controller", "Contributor statistics over time", "statisticsContributorsUsingGET",
                                             [org_ref, start_date, end_date], ok("Contributor", array=True)))
paths["/statistics/projects"] = O(get=op("statistics-controller", "Project statistics over time", "statisticsProjectsUsingGET",
                                         [org_ref, start_date, end_date, sort], ok("Project", array=True)))
paths["/statistics/languages"] = O(get=op("statistics-controller", "Language statistics over time", "statisticsLanguagesUsingGET",
                                          [org_ref, start_date, end_date], ok("Language", array=True)))
err = O()
for verb, suffix in [("get", "GET"), ("head", "HEAD"), ("post", "POST"), ("put", "PUT"), ("delete", "DELETE"), ("options", "OPTIONS"), ("patch", "PATCH")]:
    err[verb] = op("basic-error-controller", "errorHtml", "errorHtmlUsing" + suffix, [], ok())
    if verb in ("post", "put", "patch"):
        err[verb]["consumes"] = ["application/json"]
paths["/error"] = err

def obj(props):
    return O(type="object", properties=O(props))
S = lambda: {"type": "string"}
I = lambda: {"type": "integer", "format": "int64"}
F = lambda: {"type": "number", "format": "float"}
definitions = O()
definitions["ConfigDto"] = obj({"organizations": {"type": "array", "items": S()}, "githubLogin": S(), "scheduledFetch": S(), "scoringProject": S()})
definitions["ScoringFunction"] = obj({"function": S()})
definitions["Contributor"] = obj({"id": I(), "name": S(), "login": S(), "url": S(), "avatarUrl": S(), "organizationalCommitsCount": I(),
                                  "personalCommitsCount": I(), "personalProjectsCount": I(), "organizationalProjectsCount": I(),
                                  "organizationName": S(), "snapshotDate": S()})
definitions["ContributorCorrection"] = obj({"id": I(), "login": S(), "correctedField": S(), "correctedValue": S()})
definitions["Language"] = obj({"name": S(), "projectsCount": I(), "percentage": F()})
definitions["Project"] = obj({"id": I(), "gitHubProjectId": I(), "snapshotDate": S(), "name": S(), "title": S(), "image": S(),
                              "url": S(), "description": S(), "starsCount": I(), "commitsCount": I(), "forksCount": I(),
                              "contributorsCount": I(), "score": I(), "primaryLanguage": S(), "organizationName": S(),
                              "languageList": {"type": "array", "items": S()}, "lastPushed": S()})
definitions["Statistics"] = obj({"id": I(), "snapshotDate": S(), "organizationName": S(), "publicProjectCount": I(), "allStarsCount": I(),
                                 "allForksCount": I(), "allContributorsCount": I(), "membersCount": I(), "privateProjectCount": I(),
                                 "programLanguagesCount": I(), "tagsCount": I(), "teamsCount": I()})
definitions["ExportDto"] = obj({"date": S(), "projects": {"type": "array", "items": {"$ref": "#/definitions/Project"}},
                                "contributors": {"type": "array", "items": {"$ref": "#/definitions/Contributor"}},
                                "statistics": {"type": "array", "items": {"$ref": "#/definitions/Statistics"}}})

doc = O(swagger="2.0",
        info=O(description="Statistics about the open source projects, contributors and languages of GitHub organizations",
               version="1.0", title="CatWatch REST API", license=O(name="Apache License 2.0")),
        host="localhost:8080", basePath="/",
        tags=[O(name=t) for t in ["config-controller", "contributors-controller", "database-controller", "fetch-controller",
                                  "languages-controller", "projects-controller", "statistics-controller", "basic-error-controller"]],
        paths=paths,
        parameters=O(organizations=qp("organizations", "Comma separated list of GitHub organization names")),
        definitions=definitions)
n = sum(1 for p in paths.values() for v in p)
assert n == 24, n
print(json.dumps(doc, indent=2))

#include "tkg/prompts.hpp"

namespace tkg::prompts {

// Route planning, global initialization and relevance scoring are shipped as
// published. The remaining four are local additions in the same register.

const std::string_view kRoutePlanning = R"PROMPT(You are a helpful assistant who is good at answering questions in the {domain} domain by using knowledge from an external knowledge graph. Before answering the question, you need to break down the question so that you may look for the information from the knowledge graph in a step-wise operation. Hence, please break down the process of answering the question into as few sub-objectives as possible based on semantic analysis. A query time is also provided; please consider including the time information when applicable.

There can be multiple possible route to break down the question, aim for generating {route} possible routes. Note that every route may have a different solving efficiency, order the route by their solving efficiency.
Return your reasoning and sub-objectives as multiple lists of strings in a flat JSON of format: {"reason": "...", "routes": [[<a list of sub-objectives>], [<a list of sub-objectives>], ...]}. (TIP: You will need to escape any double quotes in the string to make the JSON valid)

-Example-
Q: Which of the countries in the Caribbean has the smallest country calling code?
Query Time: 03/05/2024, 23:35:21 PT
Output: {
"reason": "The most efficient route involves directly identifying Caribbean countries and their respective calling codes, as this limits the scope of the search. In contrast, routes that involve broader searches, such as listing all country calling codes worldwide before filtering, are less efficient due to the larger dataset that needs to be processed. Therefore, routes are ordered based on the specificity of the initial search and the subsequent steps required to narrow down to the answer.",
"routes": [["List all Caribbean countries", "Determine the country calling code for each country", "Identify the country with the smallest calling code"],
["Identify Caribbean countries", "Retrieve their country calling codes", "Compare to find the smallest"],
["Identify the smallest country calling code globally", "Filter by Caribbean countries", "Select the smallest among them"],
["List all country calling codes worldwide", "Filter the calling codes by Caribbean countries", "Find the smallest one"]]
}

Q: <query>
Query Time: <query time>
Output Format (flat JSON): {"reason": "...", "routes": [[<a list of sub-objectives>], [<a list of sub-objectives>], ...]}
Output:)PROMPT";

const std::string_view kGlobalInitialization = R"PROMPT(-Goal-
You are presented with a question in the {domain} domain, its query time, and a potential route to solve it.

1) Determine the topic entities asked in the query and each step in the solving route. The topic entities will be used as source entities to search through a knowledge graph for answers.
It's preferrable to mention the entity type explictly to ensure a more precise search hit.

2) Extract those topic entities from the query into a string list in the format of ["entity1", "entity2", ...].
Consider extracting the entities in an informative way, combining adjectives or surrounding information. 
A query time is provided - please consider including the time information when applicable.

*NEVER include ANY EXPLANATION or NOTE in the output, ONLY OUTPUT JSON*  

-Examples-
<few-shot examples>

Question: <query>
Query Time: <query time>
Solving Route: <route>
Output Format: ["entity1", "entity2", ...]
Output:)PROMPT";

const std::string_view kRelevanceScoring = R"PROMPT(-Goal-
You are presented with a question in the {domain} domain, its query time, a potential route to solve it, and a list of entities extracted from a noisy knowledge graph.
The goal is to identify all possible relevant entities to answering the steps in the solving route and, therefore, answer the question.
You need to consider that the knowledge graph may be noisy and relations may split into similar entities, so it's essential to identify all relevant entities.
The entities' relevance would be scored on a scale from 0 to 1 (use at most 3 decimal places, and remove trailing zeros; the sum of the scores of all entities is 1). 

-Steps-
1. You are provided a set of entities (type, name, description, and potential properties) globally searched from a knowledge graph that most similar to the question description, but may not directly relevant to the question itself.
Given in the format of "ent_i: (<entity type>: <entity name>, desc: "description", props: {key: [val_1 (70%, ctx:"context"), val_2 (30%, ctx:"context")], ...})"
where "i" is the index, the percentage is confidence score, "ctx" is an optional context under which the value is valid. Each property may have only a single value, or multiple valid values of vary confidence under different context.

2. Score *ALL POSSIBLE* entities that are relevant to answering the steps in the solving route and therefore answering the question, and provide a short reason for your scoring.
Return its index (ent_i) and score into a valid JSON of the format: {"reason": "reason", "relevant entities": {"ent_i": 0.6, "ent_j": 0.3, ...}}. (TIP: You will need to escape any double quotes in the string to make the JSON valid)

*NEVER include ANY EXPLANATION or NOTE in the output, ONLY OUTPUT JSON*  

-Examples-
<few-shot examples>

Question: <query>
Query Time: <query time>
Solving Route: <route>
Entities: <topk entities str>

Output Format (flat JSON): {"reason": "reason", "relevant_entities": {"ent_i": 0.6, "ent_j": 0.3, ...}}
Output:)PROMPT";

const std::string_view kRelationScoring = R"PROMPT(-Goal-
You are presented with a question in the {domain} domain, the sub-objectives of a route to solve it, and the outgoing relations of one knowledge graph entity (with edge counts).
Score every relation by how useful following it is for the sub-objectives and the question, on a scale from 0 to 1 (use at most 3 decimal places; the sum of the scores of all relations is 1).

*NEVER include ANY EXPLANATION or NOTE in the output, ONLY OUTPUT JSON*  

Question: <query>
Solving Route: <route>
Relations: <relations>

Output Format (flat JSON): {"reason": "reason", "relevant_relations": {"relation": 0.6, "other relation": 0.4}}
Output:)PROMPT";

const std::string_view kAlignScoring = R"PROMPT(-Goal-
Decide whether two knowledge graph entity descriptions, one extracted from a document and one already stored, refer to the same real-world entity. Consider type, name variants, description and time.
Return a score from 0 (different entities) to 1 (certainly the same entity).

*NEVER include ANY EXPLANATION or NOTE in the output, ONLY OUTPUT JSON*  

Extracted: <candidate>
Stored: <stored>

Output Format (flat JSON): {"reason": "reason", "score": 0.0}
Output:)PROMPT";

const std::string_view kTripleExtraction = R"PROMPT(-Goal-
Extract a knowledge graph from a document in the {domain} domain. Identify entities (type, name, short description) and the facts connecting them. For every fact give the validity interval when the document states it (ISO-8601 dates, null when unknown) and mark it exclusive when only one value can hold at a time (for example a birth date).

*NEVER include ANY EXPLANATION or NOTE in the output, ONLY OUTPUT JSON*  

Document title: <title>
Published: <published>
Document: <document>

Output Format (flat JSON): {"entities": [{"type": "...", "name": "...", "description": "..."}], "facts": [{"subject_type": "...", "subject": "...", "relation": "...", "object_type": "...", "object": "...", "start": null, "end": null, "exclusive": false}]}
Output:)PROMPT";

const std::string_view kAnswerJudging = R"PROMPT(-Goal-
You are presented with a question in the {domain} domain and reasoning paths retrieved from a knowledge graph. Decide whether the paths already contain the answer. If they do, give the answer as the name of the entity that answers the question.

*NEVER include ANY EXPLANATION or NOTE in the output, ONLY OUTPUT JSON*  

Question: <query>
Paths:
<paths>

Output Format (flat JSON): {"answered": true, "answer": "..."}
Output:)PROMPT";

std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
    std::string out(tmpl);
    for (const auto& [key, value] : slots) {
        std::size_t pos = 0;
        while ((pos = out.find(key, pos)) != std::string::npos) {
            out.replace(pos, key.size(), value);
            pos += value.size();
        }
    }
    return out;
}

} // namespace tkg::prompts

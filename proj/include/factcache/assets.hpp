#pragma once
// Text assets, byte-identical to the files under assets/ (checked by
// tests/assets_test.cpp). Keep both in sync when editing either.

#include <string_view>

namespace factcache::assets {

// Equivalent-property discovery between DBpedia and Wikidata.
inline constexpr std::string_view kEquivalentPropertiesQuery = R"ASSET(SELECT ?DBpediaProp ?itemLabel ?WikidataProp
WHERE
  {
    ?DBpediaProp  owl:equivalentProperty  ?WikidataProp .
          FILTER ( CONTAINS ( str(?WikidataProp) , 'wikidata' ) ) .
    ?DBpediaProp    rdfs:label    ?itemLabel .
          FILTER (lang(?itemLabel) = 'en')
  }
ORDER BY  ?WikidataProp
)ASSET";

// Triples for one Wikidata property; placeholders {item}, {limit}, {offset}.
inline constexpr std::string_view kWikidataTriplesQuery = R"ASSET(SELECT DISTINCT ?subject ?object ?subjectLabel ?objectLabel (COUNT(distinct ?r) AS ?relationCount)
WITH {
SELECT DISTINCT ?subject ?object ?subjectLabel ?objectLabel
    WHERE {
      ?subject wdt:{item} ?object.
      # ?subject wdt:P31 wd:Q5.
  ?subject rdfs:label ?subjectLabel.   
     FILTER(LANG(?subjectLabel) = "en").
  OPTIONAL {?object rdfs:label ?objectLabel.}  
     FILTER(LANG(?objectLabel) = "en").
    }
LIMIT {limit}
OFFSET {offset}
} AS 

WHERE{
  INCLUDE 
  ?subject ?r []
}
GROUP BY ?subject ?object ?subjectLabel ?objectLabel
)ASSET";

// Triples for one DBpedia property; placeholder {property_url}.
inline constexpr std::string_view kDbpediaTriplesQuery = R"ASSET(PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>
SELECT ?subject ?subjectLabel ?object ?objectLabel 
WHERE {
  ?subject <{property_url}> ?object.
  # ?subject <http://dbpedia.org/ontology/primeMinister> ?object.
  ?subject rdfs:label ?subjectLabel.
     FILTER(LANG(?subjectLabel) = "en").
 OPTIONAL { ?object rdfs:label  ?objectLabel. FILTER(LANG(?objectLabel) = "en"). }
}
)ASSET";

// Entity-extraction prompt as printed, with its exemplar markers.
inline constexpr std::string_view kEntityExtractionPromptFigure = R"ASSET(Given a sentence, identify and extract the primary entity mentioned. Ensure that the entity extracted does not include any punctuation or special characters. Your response should consist of the entity's name or title, such as a person's name, place, or organization. If the sentence contains multiple entities, select the most prominent or elevant one. 

##few-shot
What is the inspiration behind the name of Seine-Maritime?
Seine-Maritime

Who is the cast member of Casino Royale?
Casino Royale

##total 8 few-shot 
)ASSET";

// Evidence-utilization prompt layout as printed.
inline constexpr std::string_view kKnowledgeUtilizationPromptFigure = R"ASSET(<task_prompt>

##few-shot
(Hiroshima Prefecture, head of government, Hidehiko Yuzaki)
Q: Who is the leader of the government in Hiroshima Prefecture?
A: Hidehiko Yuzaki.

(Naples, head of government, Gaetano Manfredi)
Q: Who is the current head of government for Naples?
A: Gaetano Manfredi.

##total 3 few-shot
<Retrieved triples>
Q: <query>
A: 
)ASSET";

// Per-task instruction table as printed.
inline constexpr std::string_view kTaskInstructionsFigure = R"ASSET(completion: "Complete the sentence with a phrase."
qa: "Answer the question with one phrase."
local: "Answer the question with one phrase."
fill: "Identify the content within the parentheses and provide the missing information."
choose: "Choose the best answer."
fc: "Determine the veracity of the provided statement. Clearly output 'True' if the statement is accurate and 'False' if it is not." 
)ASSET";

}  // namespace factcache::assets
